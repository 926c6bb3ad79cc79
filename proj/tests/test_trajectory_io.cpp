#include "test_support.hpp"

#include "opsplit/datagen.hpp"
#include "opsplit/trajectory_io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace opsplit;
using namespace opsplit::testing;
namespace fs = std::filesystem;

namespace {

class TrajectoryFile : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("opsplit_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  static Trajectory sample_trajectory() {
    Trajectory t;
    const Grid g{2, 8, 2.0};
    for (int i = 0; i < 3; ++i) t.frames.push_back(random_field(g, 2, 40 + i));
    t.dt = 0.1;
    t.mu = {{"F", 0.04}, {"k", 0.06}};
    t.seed = 0xFFFFFFFFFFFFFFF1ULL;
    t.generator = "grayscott";
    t.solver_settings = {{"method", "lawson rk4"}};
    return t;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void dump(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  static FormatError::Kind kind_of(const fs::path& p) {
    try {
      read_trajectory(p);
    } catch (const FormatError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "read succeeded";
    return FormatError::Kind::Io;
  }

  fs::path dir_;
};

TEST_F(TrajectoryFile, RoundTripIsBitIdentical) {
  const Trajectory t = sample_trajectory();
  write_trajectory(t, path("a.traj"));
  const Trajectory back = read_trajectory(path("a.traj"));
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    EXPECT_EQ(std::memcmp(back.frames[i].values().data(), t.frames[i].values().data(), t.frames[i].size() * 8), 0);
  EXPECT_EQ(back.frames, t.frames);
  EXPECT_EQ(back.dt, t.dt);
  EXPECT_EQ(back.mu, t.mu);
  EXPECT_EQ(back.seed, t.seed);
  EXPECT_EQ(back.generator, t.generator);
  EXPECT_EQ(back.solver_settings, t.solver_settings);
}

TEST_F(TrajectoryFile, RoundTripsGeneratedBenchmark) {
  const Trajectory t = generate_benchmark(Benchmark::AdvDiff, {{"c", 0.5}, {"D", 0.3}}, InitSpec{.seed = 1});
  write_trajectory(t, path("adv.traj"));
  const Trajectory back = read_trajectory(path("adv.traj"));
  EXPECT_EQ(back.frames, t.frames);
  EXPECT_EQ(back.dt, t.dt);
}

TEST_F(TrajectoryFile, LayoutIsMagicLengthHeaderPayloadChecksum) {
  const Trajectory t = sample_trajectory();
  write_trajectory(t, path("a.traj"));
  const std::string bytes = slurp(path("a.traj"));
  ASSERT_EQ(bytes.substr(0, 8), "OPSTRAJ1");
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[8 + static_cast<std::size_t>(i)]);
  const std::string header = bytes.substr(16, len);
  EXPECT_EQ(header.back(), '\n');
  const auto j = nlohmann::json::parse(header);
  EXPECT_EQ(j.at("byte_order"), "little");
  EXPECT_EQ(j.at("dtype"), "float64");
  EXPECT_EQ(j.at("frames"), 3);
  EXPECT_EQ(j.at("channels"), 2);
  const std::size_t payload = 3 * 2 * 64 * 8;
  EXPECT_EQ(bytes.size(), 16 + len + payload + 8);
  // first payload double is frame 0, channel 0, row 0, column 0
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 16 + len, 8);
  EXPECT_EQ(first, t.frames[0][0]);

  // FNV-1a over the payload bytes, computed here byte by byte
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 16 + len; i < 16 + len + payload; ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t stored = 0;
  for (int i = 7; i >= 0; --i) stored = (stored << 8) | static_cast<unsigned char>(bytes[16 + len + payload + static_cast<std::size_t>(i)]);
  EXPECT_EQ(stored, h);
}

TEST_F(TrajectoryFile, HeaderOnlyRead) {
  write_trajectory(sample_trajectory(), path("a.traj"));
  // drop the payload: the header is still readable, the full read is not
  const std::string bytes = slurp(path("a.traj"));
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[8 + static_cast<std::size_t>(i)]);
  dump(path("b.traj"), bytes.substr(0, 16 + len));
  const TrajectoryHeader h = read_trajectory_header(path("b.traj"));
  EXPECT_EQ(h.frames, 3u);
  EXPECT_EQ(h.grid, (Grid{2, 8, 2.0}));
  EXPECT_EQ(h.channels, 2);
  EXPECT_EQ(h.seed, 0xFFFFFFFFFFFFFFF1ULL);
  EXPECT_EQ(kind_of(path("b.traj")), FormatError::Kind::Truncated);
}

TEST_F(TrajectoryFile, TruncatedPayload) {
  write_trajectory(sample_trajectory(), path("a.traj"));
  const std::string bytes = slurp(path("a.traj"));
  dump(path("a.traj"), bytes.substr(0, bytes.size() - 100));
  EXPECT_EQ(kind_of(path("a.traj")), FormatError::Kind::Truncated);
  dump(path("a.traj"), bytes.substr(0, bytes.size() - 3));
  EXPECT_EQ(kind_of(path("a.traj")), FormatError::Kind::Truncated);
}

TEST_F(TrajectoryFile, FlippedPayloadBitFailsChecksum) {
  write_trajectory(sample_trajectory(), path("a.traj"));
  std::string bytes = slurp(path("a.traj"));
  bytes[bytes.size() - 20] ^= 0x01;
  dump(path("a.traj"), bytes);
  EXPECT_EQ(kind_of(path("a.traj")), FormatError::Kind::ChecksumMismatch);
}

TEST_F(TrajectoryFile, BadMagicAndCorruptHeader) {
  write_trajectory(sample_trajectory(), path("a.traj"));
  std::string bytes = slurp(path("a.traj"));
  std::string bad = bytes;
  bad[0] = 'X';
  dump(path("m.traj"), bad);
  EXPECT_EQ(kind_of(path("m.traj")), FormatError::Kind::BadMagic);

  bad = bytes;
  bad[17] = '!';  // inside the JSON text
  dump(path("h.traj"), bad);
  EXPECT_EQ(kind_of(path("h.traj")), FormatError::Kind::CorruptHeader);

  bad = bytes;
  bad[8] = static_cast<char>(0xFF);  // header length out of range
  bad[15] = static_cast<char>(0x7F);
  dump(path("l.traj"), bad);
  EXPECT_EQ(kind_of(path("l.traj")), FormatError::Kind::CorruptHeader);

  dump(path("t.traj"), bytes + "x");
  EXPECT_EQ(kind_of(path("t.traj")), FormatError::Kind::CorruptHeader);

  dump(path("e.traj"), "");
  EXPECT_EQ(kind_of(path("e.traj")), FormatError::Kind::BadMagic);
}

TEST_F(TrajectoryFile, MissingFileAndUnwritableTarget) {
  EXPECT_EQ(kind_of(path("nope.traj")), FormatError::Kind::Io);
  try {
    write_trajectory(sample_trajectory(), path("no_dir") / "a.traj");
    FAIL() << "expected an I/O error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::Io);
  }
}

TEST_F(TrajectoryFile, AtomicWriteLeavesNoTemporary) {
  write_trajectory(sample_trajectory(), path("a.traj"));
  write_trajectory(sample_trajectory(), path("a.traj"));
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir_)) names.push_back(e.path().filename().string());
  EXPECT_EQ(names, std::vector<std::string>{"a.traj"});
}

TEST_F(TrajectoryFile, InvalidTrajectoryNotWritten) {
  Trajectory t = sample_trajectory();
  t.frames.resize(1);
  EXPECT_THROW(write_trajectory(t, path("a.traj")), InvalidArgument);
  EXPECT_FALSE(fs::exists(path("a.traj")));
}

TEST(Manifest, CsvSchema) {
  std::ostringstream os;
  write_manifest(os, {{"advdiff_0000.traj", "advdiff", 3, 100, 0.5, {{"D", 0.3}, {"c", 0.5}}},
                      {"ns_0001.traj", "navier_stokes", 4, 50, 0.25, {}}});
  EXPECT_EQ(os.str(),
            "file,benchmark,seed,frames,dt,mu\n"
            "advdiff_0000.traj,advdiff,3,100,0.5,D=0.3;c=0.5\n"
            "ns_0001.traj,navier_stokes,4,50,0.25,\n");
}

}  // namespace

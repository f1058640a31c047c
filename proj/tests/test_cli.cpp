// Copyright 2026 The eXmY Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct Result {
  int rc = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("exmy_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Result run(const std::string& args) const {
    const std::string cmd = std::string(EXMY_CLI_PATH) + " " + args + " > " + path("stdout") +
                            " 2> " + path("stderr");
    const int status = std::system(cmd.c_str());
    Result r;
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(path("stdout"));
    r.err = slurp(path("stderr"));
    return r;
  }

  std::string write_f32(const std::string& name, const std::vector<float>& v) const {
    std::string bytes(v.size() * 4, '\0');
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto b = std::bit_cast<std::uint32_t>(v[i]);
      for (int j = 0; j < 4; ++j) bytes[4 * i + j] = static_cast<char>(b >> (8 * j));
    }
    std::ofstream(path(name), std::ios::binary) << bytes;
    return path(name);
  }

  std::vector<float> read_f32(const std::string& p) const {
    const std::string bytes = slurp(p);
    std::vector<float> v(bytes.size() / 4);
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::uint32_t b = 0;
      for (int j = 0; j < 4; ++j) b |= std::uint32_t{static_cast<std::uint8_t>(bytes[4 * i + j])} << (8 * j);
      v[i] = std::bit_cast<float>(b);
    }
    return v;
  }

  fs::path dir_;
};

std::vector<float> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd;
  std::vector<float> v(n);
  for (auto& x : v) x = nd(rng) * std::ldexp(1.0f, static_cast<int>(rng() % 7) - 3);
  return v;
}

TEST_F(Cli, AnalyzeOnes) {
  const std::string in = write_f32("ones.f32", std::vector<float>(1024, 1.0f));
  const Result r = run("analyze -i " + in);
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out)[in];
  EXPECT_EQ(j["counts"][127], 1024);
  EXPECT_EQ(j["counts"].size(), 256u);
  EXPECT_EQ(j["stats"]["lossless_exponent_bits"], 0);
  EXPECT_EQ(j["recommendation"]["exponent_bits"], 1);
}

TEST_F(Cli, AnalyzeRecommendsFourBitsForFifteenExponents) {
  std::vector<float> v;
  for (int i = 0; i < 20000; ++i) v.push_back(std::ldexp(1.25f, (i % 15) - 10));
  for (int i = 0; i < 10; ++i) v.push_back(std::ldexp(1.0f, -30 - i));  // 0.05% tail
  const std::string in = write_f32("w.f32", v);
  const Result r = run("analyze --budget 0.001 -i " + in);
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)[in]["recommendation"]["exponent_bits"], 4);
  // Zero budget must span 2^-39 .. 2^4: 44 exponents.
  EXPECT_EQ(nlohmann::json::parse(run("analyze --budget 0 -i " + in).out)[in]["recommendation"]["exponent_bits"], 6);
}

TEST_F(Cli, AnalyzeReports) {
  const std::string in = write_f32("r.f32", random_values(256, 1));
  const Result csv = run("analyze --report csv --format e3m2 --block row --shape 16,16 -i " + in);
  ASSERT_EQ(csv.rc, 0) << csv.err;
  EXPECT_EQ(csv.out.rfind("input,section,key,value\n", 0), 0u);
  EXPECT_NE(csv.out.find(",recommendation,exponent_bits,"), std::string::npos);
  EXPECT_NE(csv.out.find(",quantization,flushed,"), std::string::npos);
  const Result text = run("analyze --report text -o " + path("rep.txt") + " -i " + in);
  ASSERT_EQ(text.rc, 0);
  EXPECT_TRUE(text.out.empty());
  EXPECT_NE(slurp(path("rep.txt")).find("exponent bits"), std::string::npos);
  const auto j = nlohmann::json::parse(run("analyze --format e3m2 --block row --shape 16,16 -i " + in).out)[in];
  EXPECT_EQ(j["quantization"]["flushed_per_block"].size(), 16u);
}

TEST_F(Cli, EmptyInput) {
  const std::string in = write_f32("empty.f32", {});
  const Result r = run("analyze -i " + in);
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("empty tensor"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, UserErrors) {
  const std::string in = write_f32("r.f32", random_values(96, 2));
  EXPECT_EQ(run("analyze -i " + path("missing.f32")).rc, 2);
  Result r = run("emulate -i " + in + " --shape 10,10 --format e3m2 -o " + path("o"));
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("SizeMismatch"), std::string::npos);
  r = run("emulate -i " + in + " --format e9m2 -o " + path("o"));
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("InvalidFormat"), std::string::npos);
  r = run("emulate -i " + in + " --shape 8,12 --format e3m2 --block subrow:5 -o " + path("o"));
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("BlockShapeMismatch"), std::string::npos);
  r = run("encode -i " + in + " --shape 12,8 --format e3m2 -o " + path("o.exmy"));
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("RowsNotMultipleOf8"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("o.exmy")));
  EXPECT_EQ(run("analyze --budget 1.5 -i " + in).rc, 2);
  EXPECT_EQ(run("frobnicate").rc, 2);
  EXPECT_EQ(run("").rc, 2);
  EXPECT_EQ(run("--help").rc, 0);
}

TEST_F(Cli, EmulateMaxAfterRoundsUp) {
  const std::string in = write_f32("x.f32", {3.9f, 1.0f, 0.5f, -2.0f});
  const Result r = run("emulate --format e2m1 --scheme max-after -i " + in + " -o " + path("o.f32"));
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto out = read_f32(path("o.f32"));
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0], 4.0f);
  ASSERT_EQ(run("emulate --format e2m1 -i " + in + " -o " + path("b.f32")).rc, 0);
  EXPECT_EQ(read_f32(path("b.f32"))[0], 3.0f);
  ASSERT_EQ(run("emulate --format e2m1 --scheme float-scale -i " + in + " -o " + path("f.f32")).rc, 0);
  EXPECT_EQ(read_f32(path("f.f32"))[0], 3.9f);
}

TEST_F(Cli, EmulateWideFormatIsIdentity) {
  const auto v = random_values(64, 3);
  const std::string in = write_f32("r.f32", v);
  ASSERT_EQ(run("emulate --format e8m23 -i " + in + " -o " + path("o.f32")).rc, 0);
  EXPECT_EQ(slurp(path("o.f32")), slurp(in));
}

TEST_F(Cli, EmulateDeterministicAndIdempotent) {
  const std::string in = write_f32("r.f32", random_values(512, 4));
  const std::string flags = " --format e3m1 --scheme max-after --block subrow:16 --shape 16,32";
  ASSERT_EQ(run("emulate" + flags + " -i " + in + " -o " + path("a.f32")).rc, 0);
  ASSERT_EQ(run("emulate" + flags + " -i " + in + " -o " + path("b.f32")).rc, 0);
  ASSERT_EQ(run("emulate" + flags + " -i " + path("a.f32") + " -o " + path("c.f32")).rc, 0);
  EXPECT_EQ(fs::file_size(path("a.f32")), 512u * 4u);
  EXPECT_EQ(slurp(path("a.f32")), slurp(path("b.f32")));
  EXPECT_EQ(slurp(path("a.f32")), slurp(path("c.f32")));
  for (const auto& e : fs::directory_iterator(dir_)) {
    EXPECT_EQ(e.path().string().find(".tmp"), std::string::npos);
  }
}

TEST_F(Cli, EncodeDecodeEmulateTriangle) {
  auto v = random_values(32 * 24, 5);
  v[17] = std::numeric_limits<float>::quiet_NaN();
  v[300] = -std::numeric_limits<float>::infinity();
  const std::string in = write_f32("r.f32", v);
  for (const std::string cfg : {"--format e3m2 --block row", "--format e4m3 --scheme max-after --block subrow:8",
                                "--format e2m1 --scheme float-scale --block tile:8x8 --scale-type bf16",
                                "--format e5m2 --block col"}) {
    const std::string flags = " --shape 32,24 " + cfg;
    ASSERT_EQ(run("encode" + flags + " -i " + in + " -o " + path("t.exmy")).rc, 0) << cfg;
    ASSERT_EQ(run("decode -i " + path("t.exmy") + " -o " + path("d.f32")).rc, 0) << cfg;
    ASSERT_EQ(run("emulate" + flags + " -i " + in + " -o " + path("e.f32")).rc, 0) << cfg;
    EXPECT_EQ(slurp(path("d.f32")), slurp(path("e.f32"))) << cfg;
  }
}

TEST_F(Cli, Bf16Input) {
  std::string bytes;
  for (std::uint16_t b : {0x3f80, 0x4079, 0xbf00, 0x0000, 0x3e80, 0x4000, 0x3fc0, 0xc040}) {
    bytes.push_back(static_cast<char>(b & 0xff));
    bytes.push_back(static_cast<char>(b >> 8));
  }
  std::ofstream(path("b.bf16"), std::ios::binary) << bytes;
  ASSERT_EQ(run("emulate --dtype bf16 --format e8m23 -i " + path("b.bf16") + " -o " + path("o.f32")).rc, 0);
  const auto out = read_f32(path("o.f32"));
  ASSERT_EQ(out.size(), 8u);
  EXPECT_EQ(out[0], 1.0f);
  EXPECT_EQ(out[1], 3.890625f);
  EXPECT_EQ(out[2], -0.5f);
  EXPECT_EQ(out[7], -3.0f);
}

TEST_F(Cli, InfoListsEntriesInOrder) {
  const std::string a = write_f32("alpha.f32", random_values(64, 6));
  const std::string b = write_f32("beta.f32", random_values(128, 7));
  Result r = run("encode --format e3m2 --block row --shape 8,8 --shape 16,8 -i " + a + " -i " + b +
              " --name second_is_first --name zeta -o " + path("m.exmy"));
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_NE(r.err.find("ratio vs fp32"), std::string::npos);
  r = run("info --report json -i " + path("m.exmy"));
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["tensors"].size(), 2u);
  EXPECT_EQ(j["tensors"][0]["name"], "second_is_first");
  EXPECT_EQ(j["tensors"][1]["name"], "zeta");
  EXPECT_EQ(j["tensors"][0]["format"], "e3m2");
  EXPECT_EQ(j["tensors"][1]["block"], "row");
  EXPECT_EQ(j["tensors"][1]["dims"], nlohmann::json::array({16, 8}));
  EXPECT_EQ(j["tensors"][0]["payload_bytes"], 64 * 6 / 8 + 8);
  EXPECT_EQ(j["file_bytes"], fs::file_size(path("m.exmy")));
  r = run("info -i " + path("m.exmy"));
  EXPECT_NE(r.out.find("second_is_first"), std::string::npos);
  EXPECT_LT(r.out.find("second_is_first"), r.out.find("zeta"));
  EXPECT_EQ(run("decode -i " + path("m.exmy") + " -o " + path("d.f32")).rc, 2);
  ASSERT_EQ(run("decode --name zeta -i " + path("m.exmy") + " -o " + path("d.f32")).rc, 0);
  EXPECT_EQ(fs::file_size(path("d.f32")), 128u * 4u);
  EXPECT_EQ(run("decode --name nope -i " + path("m.exmy") + " -o " + path("d.f32")).rc, 2);
}

TEST_F(Cli, EncodeSizeArithmetic) {
  const std::string in = write_f32("big.f32", random_values(1024 * 4096, 8));
  ASSERT_EQ(run("encode --format e3m2 --block row --shape 1024,4096 -i " + in + " -o " + path("big.exmy")).rc, 0);
  const auto j = nlohmann::json::parse(run("info --report json -i " + path("big.exmy")).out);
  EXPECT_EQ(j["tensors"][0]["payload_bytes"], 1024 * 4096 * 6 / 8 + 1024);
  EXPECT_NEAR(j["tensors"][0]["ratio_vs_fp32"].get<double>(), 5.33, 0.01);
}

TEST_F(Cli, DamagedContainers) {
  const std::string in = write_f32("r.f32", random_values(256, 9));
  ASSERT_EQ(run("encode --format e3m2 --shape 16,16 -i " + in + " -o " + path("t.exmy")).rc, 0);
  std::string bytes = slurp(path("t.exmy"));

  std::string bad = bytes;
  bad[bad.size() - 5] ^= 0x10;
  std::ofstream(path("crc.exmy"), std::ios::binary) << bad;
  Result r = run("decode -i " + path("crc.exmy") + " -o " + path("d.f32"));
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("ChecksumMismatch"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("d.f32")));

  std::ofstream(path("short.exmy"), std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  r = run("info -i " + path("short.exmy"));
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("CorruptContainer"), std::string::npos);

  r = run("info -i " + in);
  EXPECT_EQ(r.rc, 2);
  EXPECT_NE(r.err.find("BadMagic"), std::string::npos);
}

}  // namespace

#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "ulvm/errors.hpp"
#include "ulvm/image_io.hpp"
#include "ulvm/rng.hpp"
#include "ulvm/run_config.hpp"
#include "ulvm/weights_io.hpp"

namespace fs = std::filesystem;
namespace io = ulvm::io;
using ulvm::ParseError;
using ulvm::Tensor;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "ulvm_test_io";
  fs::create_directories(p);
  return p;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::size_t parse_offset(const std::vector<std::uint8_t>& b) {
  try {
    io::decode_weight_file(b);
  } catch (const ParseError& e) {
    return e.offset();
  }
  FAIL("expected a parse error");
  return 0;
}

ulvm::NetConfig toy() {
  ulvm::NetConfig c;
  c.height = c.width = 32;
  return c;
}

}  // namespace

TEST_CASE("weights: byte layout") {
  io::NamedTensors t;
  t.emplace("b", Tensor({2}, std::vector<float>{1.0f, -2.0f}));
  t.emplace("a", Tensor({1, 1}, std::vector<float>{0.5f}));
  const auto b = io::encode_weight_file(t);
  const std::vector<std::uint8_t> want{
      'U', 'V', 'M', 'W', 1, 0, 2, 0, 0, 0,           // magic, version, count
      1, 0, 'a', 2, 1, 0, 0, 0, 1, 0, 0, 0,           // "a", rank 2, 1x1
      0x00, 0x00, 0x00, 0x3f,                         // 0.5f
      1, 0, 'b', 1, 2, 0, 0, 0,                       // "b", rank 1, 2
      0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0  // 1, -2
  };
  CHECK(b == want);
  CHECK(io::decode_weight_file(b) == t);
}

TEST_CASE("weights: round trip is bitwise") {
  for (auto kind : {ulvm::InnerKind::kMamba, ulvm::InnerKind::kSS2D}) {
    auto cfg = toy();
    cfg.inner_kind = kind;
    const auto w = ulvm::init_weights(cfg, 11);
    const fs::path p = temp_dir() / "w.uvmw";
    io::save_weights(p, w, cfg);
    const auto back = io::load_weights(p, cfg);
    CHECK(back == w);
    const auto again = io::to_named(back, cfg);
    for (const auto& [name, t] : io::to_named(w, cfg)) CHECK(ulvm::bitwise_equal(t, again.at(name)));
  }
  // non-finite and signed-zero payloads survive
  io::NamedTensors odd;
  odd.emplace("x", Tensor({3}, std::vector<float>{-0.0f, std::numeric_limits<float>::infinity(),
                                                  std::numeric_limits<float>::denorm_min()}));
  const auto back = io::decode_weight_file(io::encode_weight_file(odd));
  CHECK(ulvm::bitwise_equal(back.at("x"), odd.at("x")));
}

TEST_CASE("weights: corruption is rejected with offsets") {
  io::NamedTensors t;
  t.emplace("a", Tensor({2}, 1.0f));
  t.emplace("b", Tensor({3}, 2.0f));
  const auto good = io::encode_weight_file(t);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(parse_offset(bad_magic) == 0);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(parse_offset(bad_version) == 4);

  auto truncated = good;
  truncated.pop_back();
  CHECK_THROWS_AS(io::decode_weight_file(truncated), ParseError);
  CHECK_THROWS_AS(io::decode_weight_file(std::vector<std::uint8_t>(good.begin(), good.begin() + 3)),
                  ParseError);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(parse_offset(trailing) == good.size());

  auto bad_rank = good;
  bad_rank[13] = 7;  // header 10 bytes, name length 2, name 1
  CHECK(parse_offset(bad_rank) == 13);

  auto zero_extent = good;
  std::memset(zero_extent.data() + 14, 0, 4);
  CHECK(parse_offset(zero_extent) == 14);

  const std::vector<io::WeightEntry> dup{{"a", Tensor({1})}, {"a", Tensor({1})}};
  CHECK_THROWS_AS(io::decode_weight_file(io::encode_entries(dup)), ParseError);
  const std::vector<io::WeightEntry> unsorted{{"b", Tensor({1})}, {"a", Tensor({1})}};
  CHECK_THROWS_AS(io::decode_weight_file(io::encode_entries(unsorted)), ParseError);
}

TEST_CASE("weights: mismatch against config") {
  const auto cfg = toy();
  auto named = io::to_named(ulvm::init_weights(cfg, 1), cfg);
  auto missing = named;
  missing.erase(missing.begin());
  CHECK_THROWS_AS(io::from_named(missing, cfg), ulvm::ConfigError);
  auto extra = named;
  extra.emplace("zzz", Tensor({1}));
  CHECK_THROWS_AS(io::from_named(extra, cfg), ulvm::ConfigError);
  auto wrong = named;
  wrong.at("head.bias") = Tensor({2});
  CHECK_THROWS_AS(io::from_named(wrong, cfg), ulvm::ConfigError);
  auto other = cfg;
  other.parallelism = 2;
  CHECK_THROWS_AS(io::from_named(named, other), ulvm::ConfigError);
}

TEST_CASE("images: pgm scaling and masks") {
  const auto b = bytes_of("P5\n2 2\n255\n") ;
  auto bytes = b;
  for (std::uint8_t v : {0, 255, 128, 64}) bytes.push_back(v);
  const fs::path p = temp_dir() / "a.pgm";
  io::write_file_bytes(p, bytes);
  const Tensor img = io::load_image_pgm(p);
  CHECK(img.shape() == ulvm::Shape{1, 2, 2});
  CHECK(img[0] == 0.0f);
  CHECK(img[1] == 1.0f);
  CHECK(img[2] == doctest::Approx(0.50196).epsilon(1e-5));
  CHECK(img[3] == doctest::Approx(0.25098).epsilon(1e-5));

  auto mb = b;
  for (std::uint8_t v : {128, 127, 255, 0}) mb.push_back(v);
  io::write_file_bytes(p, mb);
  CHECK(io::load_mask_pgm(p) == Tensor({1, 2, 2}, std::vector<float>{1, 0, 1, 0}));
  CHECK_THROWS_AS(io::load_image_ppm(p), ParseError);
}

TEST_CASE("images: header parsing") {
  auto with_comment = bytes_of("P5 # comment\n# another\n 1\t2 255\n");
  with_comment.push_back(10);
  with_comment.push_back(20);
  const auto img = io::decode_pnm(with_comment);
  CHECK(img.width == 1);
  CHECK(img.height == 2);
  CHECK(img.pixels == std::vector<std::uint8_t>{10, 20});

  CHECK_THROWS_AS(io::decode_pnm(bytes_of("P2\n1 1\n255\n0")), ParseError);
  CHECK_THROWS_AS(io::decode_pnm(bytes_of("P5\n1 1\n65535\n00")), ParseError);
  CHECK_THROWS_AS(io::decode_pnm(bytes_of("P5\n1 x\n255\n0")), ParseError);
  CHECK_THROWS_AS(io::decode_pnm(bytes_of("P5\n2 2\n255\n012")), ParseError);
  CHECK_THROWS_AS(io::decode_pnm(bytes_of("P5\n0 2\n255\n")), ParseError);
  CHECK_THROWS_AS(io::decode_pnm(bytes_of("P5\n1 1\n255")), ParseError);
}

TEST_CASE("images: ppm round trip") {
  io::PnmImage src;
  src.width = 5;
  src.height = 3;
  src.channels = 3;
  ulvm::SplitMix64 rng(3);
  for (int i = 0; i < 45; ++i) src.pixels.push_back(std::uint8_t(rng.next() & 0xff));
  const auto bytes = io::encode_pnm(src);
  const fs::path p = temp_dir() / "rt.ppm";
  io::write_file_bytes(p, bytes);
  const Tensor t = io::load_image_ppm(p);
  CHECK(t.shape() == ulvm::Shape{3, 3, 5});
  CHECK(t.at({1, 0, 0}) == float(src.pixels[1]) / 255.0f);
  const fs::path q = temp_dir() / "rt2.ppm";
  io::write_ppm(q, t);
  CHECK(io::read_file_bytes(q) == bytes);

  const Tensor prob({1, 1, 4}, std::vector<float>{0.0f, 0.5f, 1.0f, 1.7f});
  io::write_pgm(q, prob);
  const auto img = io::read_pnm(q);
  CHECK(img.pixels == std::vector<std::uint8_t>{0, 128, 255, 255});
  CHECK_THROWS_AS(io::write_pgm(q, Tensor({3, 2, 2})), ulvm::DimensionError);
}

TEST_CASE("run config: parsing") {
  const auto def = io::parse_run_config("{}");
  CHECK(def.net.channels == std::array<std::size_t, 6>{8, 16, 24, 32, 48, 64});
  CHECK(def.net.parallelism == 4);
  CHECK(def.net.height == 256);
  CHECK(def.net.width == 256);
  CHECK(def.seed == 0);

  const auto rc = io::parse_run_config(R"({"channels":[16,32,64,128,256,512],"parallelism":2,
      "inner_kind":"ss2d","input_size":[64,32],"seed":9,"bridge_enabled":false,
      "flop_convention":"macs","theta_init":0.5,"branch_sharing":"distinct","conv_layout":"dense"})");
  CHECK(rc.net.channels[5] == 512);
  CHECK(rc.net.parallelism == 2);
  CHECK(rc.net.inner_kind == ulvm::InnerKind::kSS2D);
  CHECK(rc.net.height == 64);
  CHECK(rc.net.width == 32);
  CHECK(rc.seed == 9);
  CHECK_FALSE(rc.net.bridge_enabled);
  CHECK(rc.flop_convention == ulvm::accounting::FlopConvention::kMacs);
  CHECK(rc.net.theta_init == 0.5f);
  CHECK(rc.net.sharing == ulvm::BranchSharing::kDistinct);
  CHECK(rc.net.conv == ulvm::ConvLayout::kDense);

  const auto back = io::parse_run_config(io::dump_run_config(rc));
  CHECK(back.net.channels == rc.net.channels);
  CHECK(back.net.height == 64);
  CHECK(back.seed == 9);
  CHECK(back.net.sharing == rc.net.sharing);

  for (const char* bad : {R"({"chanels":[8,16,24,32,48,64]})", R"({"channels":[8,16]})",
                          R"({"parallelism":-1})", R"({"parallelism":"4"})",
                          R"({"inner_kind":"rnn"})", R"({"input_size":48})",
                          R"({"channels":[8,8,24,32,48,64]})", R"({"seed":-3})",
                          R"({"bridge_enabled":1})", R"([1,2])", "{", R"({"parallelism":5})"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(io::parse_run_config(bad), ulvm::ConfigError);
  }
}

#include <doctest.h>

#include <string>

#include "progdf/config.hpp"
#include "progdf/error.hpp"

using namespace progdf;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    decode_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected decode_config to throw");
  return ErrorCode::kInternal;
}

}  // namespace

TEST_CASE("empty document gives defaults") {
  const PipelineConfig cfg = decode_config("{}");
  const PipelineConfig def;
  CHECK(cfg.seed == def.seed);
  CHECK(cfg.mask.epsilon == doctest::Approx(0.8));
  CHECK(cfg.gdf.iterations == def.gdf.iterations);
  CHECK(cfg.pgs.steps == def.pgs.steps);
}

TEST_CASE("encode/decode round trip is stable") {
  PipelineConfig cfg;
  cfg.seed = 17;
  cfg.rig.azimuth_steps = 8;
  cfg.rig.elevations = {-10.0, 35.0};
  cfg.mask.epsilon = 0.6;
  cfg.pgs.steps = 321;
  cfg.pgs.lambda_prog = 2.5;
  cfg.pgs.lr.color = 0.03;
  cfg.gdf.iterations = 77;
  cfg.gdf.sampling = BankSampling::kSequential;
  cfg.gdf.embedding_init = EmbeddingInit::kGaussian;
  cfg.live_gdf = true;
  cfg.apply_seed();
  const std::string text = encode_config(cfg);
  const PipelineConfig back = decode_config(text);
  CHECK(encode_config(back) == text);
  CHECK(back.pgs.seed == 17);
  CHECK(back.gdf.seed == 17);
  CHECK(back.rig.elevations.size() == 2);
  CHECK(back.gdf.sampling == BankSampling::kSequential);
  CHECK(back.live_gdf);
}

TEST_CASE("seed propagates to both trainers") {
  const PipelineConfig cfg = decode_config(R"({"seed": 42})");
  CHECK(cfg.pgs.seed == 42);
  CHECK(cfg.gdf.seed == 42);
}

TEST_CASE("partial sections keep other defaults") {
  const PipelineConfig cfg = decode_config(R"({"pgs": {"steps": 50, "lr": {"color": 0.1}}})");
  CHECK(cfg.pgs.steps == 50);
  CHECK(cfg.pgs.lr.color == doctest::Approx(0.1));
  CHECK(cfg.pgs.lr.position == doctest::Approx(PgsConfig{}.lr.position));
}

TEST_CASE("format errors") {
  CHECK(code_of("{") == ErrorCode::kFormat);
  CHECK(code_of("[]") == ErrorCode::kFormat);
  CHECK(code_of(R"({"sed": 1})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"pgs": {"stepz": 1}})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"pgs": {"steps": "many"}})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"rig": {"target": [1, 2]}})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"gdf": {"sampling": "random"}})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"mask": {"normalization": "nope"}})") == ErrorCode::kFormat);
}

TEST_CASE("invalid values are rejected") {
  CHECK(code_of(R"({"mask": {"epsilon": 0}})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"mask": {"epsilon": 1.5}})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"pgs": {"steps": 0}})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"gdf": {"learning_rate": 0}})") == ErrorCode::kFormat);
  CHECK(code_of(R"({"rig": {"elevations": []}})") == ErrorCode::kFormat);
}

TEST_CASE("error messages are prefixed") {
  try {
    decode_config(R"({"bogus": 1})");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("config:") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("missing config file is an io error") {
  try {
    load_config("/nonexistent/dir/config.json");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

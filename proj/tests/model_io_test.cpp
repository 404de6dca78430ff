//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <filesystem>

#include <doctest.h>
#include <json.hpp>

#include "mstk/model_io.hpp"
#include "mstk/synth.hpp"

using namespace mstk;

namespace {

std::vector<DescriptorVec> small_corpus() {
  std::vector<DescriptorVec> data;
  for (const auto &lm: generate_corpus(30, 9))
    for (auto &v: molecule_descriptors(lm.molecule, FrameStrategy::kSeq1D))
      data.push_back(v);
  return data;
}

QuantizerModel small_model(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.codebook_size = 8;
  cfg.epochs = 2;
  cfg.seed = seed;
  cfg.mlp.hidden_dim = 16;
  return train(small_corpus(), cfg, FrameStrategy::kSeq1D).model;
}

} // namespace

TEST_SUITE("model_io") {

TEST_CASE("binary round trip is exact") {
  const QuantizerModel m = small_model(1);
  const std::string bytes = serialize_model(m);
  CHECK(bytes.substr(0, 4) == "MSTK");
  const QuantizerModel back = deserialize_model(bytes);
  CHECK(back == m);
  CHECK(serialize_model(back) == bytes);

  const auto path =
      std::filesystem::temp_directory_path() / "mstk_model_io_test.mstk";
  save_model(m, path);
  CHECK(load_model(path) == m);
  std::filesystem::remove(path);
}

TEST_CASE("ablation model round trip") {
  TrainConfig cfg;
  cfg.codebook_size = 4;
  cfg.epochs = 1;
  cfg.mlp.hidden_dim = 8;
  cfg.mlp.sign_head = false;
  const QuantizerModel m = train(small_corpus(), cfg).model;
  CHECK(deserialize_model(serialize_model(m)) == m);
}

TEST_CASE("corrupt files are rejected") {
  const std::string bytes = serialize_model(small_model(2));
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(bad), Error);
  bad = bytes;
  bad[4] = 2; // version
  CHECK_THROWS_AS(deserialize_model(bad), Error);
  CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 1)), Error);
  CHECK_THROWS_AS(deserialize_model(bytes.substr(0, 10)), Error);
  CHECK_THROWS_AS(deserialize_model(bytes + "x"), Error);
  CHECK_THROWS_AS(deserialize_model(""), Error);
}

TEST_CASE("json export") {
  const QuantizerModel m = small_model(3);
  const auto j = nlohmann::json::parse(model_to_json(m));
  CHECK(j["format_version"] == kModelFormatVersion);
  CHECK(j["strategy"] == "1d");
  CHECK(j["codebook"]["codes"].size() == 8);
  CHECK(j["codebook"]["codes"][0].size() == 5);
  CHECK(j["codebook"]["codes"][2][1].get<double>() == m.codebook.codes(2, 1));
}

TEST_CASE("same seed gives byte-identical files") {
  CHECK(serialize_model(small_model(7)) == serialize_model(small_model(7)));
  CHECK(serialize_model(small_model(7)) != serialize_model(small_model(8)));
}

} // TEST_SUITE

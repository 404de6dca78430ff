//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mstk/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mstk {

namespace {

constexpr char kMagic[4] = { 'M', 'S', 'T', 'K' };

class Writer {
public:
  void raw(const void *p, std::size_t n) {
    out_.append(static_cast<const char *>(p), n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i)
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  template <class M>
  void tensor(const M &m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        f64(m(i, j));
  }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

class Reader {
public:
  explicit Reader(std::string_view in): in_(in) { }

  void need(std::size_t n) {
    if (in_.size() - pos_ < n)
      throw Error("model file truncated at byte " + std::to_string(pos_));
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  Matrix tensor(Eigen::Index rows, Eigen::Index cols, const char *what) {
    const auto r = u32();
    const auto c = u32();
    if (r != rows || c != cols)
      throw Error(std::string("model file: unexpected shape for ") + what);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        m(i, j) = f64();
    return m;
  }
  bool done() const { return pos_ == in_.size(); }

private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_mlp(Writer &w, const Mlp &m) {
  for (const Dense &d: m.layers) {
    w.tensor(d.w);
    w.tensor(d.b);
  }
}

void read_mlp(Reader &r, Mlp &m) {
  for (Dense &d: m.layers) {
    d.w = r.tensor(d.w.rows(), d.w.cols(), "weight");
    d.b = r.tensor(d.b.rows(), 1, "bias");
  }
}

} // namespace

std::string serialize_model(const QuantizerModel &model) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.strategy));
  const MlpConfig &c = model.params.config;
  w.i32(c.input_dim);
  w.i32(c.latent_dim);
  w.i32(c.hidden_dim);
  w.i32(c.encoder_hidden_layers);
  w.i32(c.decoder_hidden_layers);
  w.i32(c.sign_hidden_layers);
  w.i32(c.sign_head ? 1 : 0);
  const Codebook &cb = model.codebook;
  w.u32(static_cast<std::uint32_t>(cb.size()));
  for (FeatureTransform t: cb.norm_stats.transform)
    w.u32(static_cast<std::uint32_t>(t));
  for (int k = 0; k < kDescriptorDim; ++k)
    w.f64(cb.norm_stats.mean[k]);
  for (int k = 0; k < kDescriptorDim; ++k)
    w.f64(cb.norm_stats.stddev[k]);
  w.f64(cb.norm_stats.sentinel_length);
  w.f64(cb.norm_stats.sentinel_angle);
  w.tensor(cb.codes);
  w.tensor(cb.ema_counts);
  w.tensor(cb.ema_sums);
  write_mlp(w, model.params.encoder);
  write_mlp(w, model.params.decoder);
  write_mlp(w, model.params.sign);
  return w.take();
}

QuantizerModel deserialize_model(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(r.raw(4).data(), kMagic, 4) != 0)
    throw Error("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw Error("model format version " + std::to_string(version)
                + " is not supported (expected "
                + std::to_string(kModelFormatVersion) + ")");
  QuantizerModel m;
  const std::uint32_t strategy = r.u32();
  if (strategy > 2)
    throw Error("model file: bad frame strategy");
  m.strategy = static_cast<FrameStrategy>(strategy);
  MlpConfig c;
  c.input_dim = r.i32();
  c.latent_dim = r.i32();
  c.hidden_dim = r.i32();
  c.encoder_hidden_layers = r.i32();
  c.decoder_hidden_layers = r.i32();
  c.sign_hidden_layers = r.i32();
  c.sign_head = r.i32() != 0;
  if (c.input_dim != kDescriptorDim || c.latent_dim < 1 || c.hidden_dim < 1
      || c.encoder_hidden_layers < 0 || c.decoder_hidden_layers < 0
      || c.sign_hidden_layers < 0 || c.hidden_dim > (1 << 16)
      || c.encoder_hidden_layers > 64 || c.decoder_hidden_layers > 64
      || c.sign_hidden_layers > 64)
    throw Error("model file: bad network shape");
  const std::uint32_t k = r.u32();
  if (k < 1 || k > (1u << 24))
    throw Error("model file: bad codebook size");

  NormStats ns;
  for (FeatureTransform &t: ns.transform) {
    const std::uint32_t v = r.u32();
    if (v > 2)
      throw Error("model file: bad feature transform");
    t = static_cast<FeatureTransform>(v);
  }
  for (int i = 0; i < kDescriptorDim; ++i)
    ns.mean[i] = r.f64();
  for (int i = 0; i < kDescriptorDim; ++i)
    ns.stddev[i] = r.f64();
  ns.sentinel_length = r.f64();
  ns.sentinel_angle = r.f64();

  m.codebook.codes = r.tensor(k, c.latent_dim, "codes");
  m.codebook.ema_counts = r.tensor(k, 1, "ema counts");
  m.codebook.ema_sums = r.tensor(k, c.latent_dim, "ema sums");
  m.codebook.norm_stats = ns;

  // Shapes come from the config; values are overwritten below.
  m.params = init_params(c, 0);
  read_mlp(r, m.params.encoder);
  read_mlp(r, m.params.decoder);
  read_mlp(r, m.params.sign);
  if (!r.done())
    throw Error("model file: trailing bytes");
  return m;
}

std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path &p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw Error("write failed: " + p.string());
}

void save_model(const QuantizerModel &model, const std::filesystem::path &p) {
  write_file(p, serialize_model(model));
}

QuantizerModel load_model(const std::filesystem::path &p) {
  return deserialize_model(read_file(p));
}

namespace {

nlohmann::json matrix_json(const Matrix &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json mlp_json(const Mlp &m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Dense &d: m.layers)
    layers.push_back({ { "weight", matrix_json(d.w) },
                       { "bias", matrix_json(d.b) } });
  return layers;
}

const char *transform_name(FeatureTransform t) {
  switch (t) {
  case FeatureTransform::kLogLength:
    return "log_length";
  case FeatureTransform::kUnitAngle:
    return "unit_angle";
  case FeatureTransform::kPassthroughSign:
    return "passthrough_sign";
  }
  return "?";
}

} // namespace

std::string model_to_json(const QuantizerModel &model, int indent) {
  const MlpConfig &c = model.params.config;
  const NormStats &ns = model.codebook.norm_stats;
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["strategy"] = std::string(to_string(model.strategy));
  j["network"] = { { "input_dim", c.input_dim },
                   { "latent_dim", c.latent_dim },
                   { "hidden_dim", c.hidden_dim },
                   { "encoder_hidden_layers", c.encoder_hidden_layers },
                   { "decoder_hidden_layers", c.decoder_hidden_layers },
                   { "sign_hidden_layers", c.sign_hidden_layers },
                   { "sign_head", c.sign_head },
                   { "parameters", model.params.parameter_count() } };
  nlohmann::json norm;
  for (int k = 0; k < kDescriptorDim; ++k)
    norm["transform"].push_back(transform_name(ns.transform[k]));
  norm["mean"] = std::vector<double>(ns.mean.data(), ns.mean.data() + 14);
  norm["stddev"] = std::vector<double>(ns.stddev.data(), ns.stddev.data() + 14);
  norm["sentinel_length"] = ns.sentinel_length;
  norm["sentinel_angle"] = ns.sentinel_angle;
  j["norm_stats"] = norm;
  j["codebook"] = { { "size", model.codebook.size() },
                    { "codes", matrix_json(model.codebook.codes) },
                    { "ema_counts", matrix_json(model.codebook.ema_counts) },
                    { "ema_sums", matrix_json(model.codebook.ema_sums) } };
  j["encoder"] = mlp_json(model.params.encoder);
  j["decoder"] = mlp_json(model.params.decoder);
  j["sign_head"] = mlp_json(model.params.sign);
  return j.dump(indent);
}

} // namespace mstk

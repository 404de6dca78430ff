//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_MODEL_IO_HPP_
#define MSTK_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mstk/vq.hpp"

namespace mstk {

constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary container:
///
///   "MSTK" u32 version u32 strategy
///   i32 x 7 network shape (input, latent, hidden, three depths, sign head)
///   u32 K
///   u32 x 14 transforms, f64 x 14 means, f64 x 14 deviations,
///   f64 sentinel length, f64 sentinel angle
///   tensors: codes, ema counts, ema sums, then every layer's weight and bias
///   (encoder, decoder, sign head), each as u32 rows, u32 cols and row-major
///   f64 values.
///
/// Every integer and float is little-endian.
std::string serialize_model(const QuantizerModel &model);
/// Throws mstk::Error on bad magic, a version mismatch or truncation.
QuantizerModel deserialize_model(std::string_view bytes);

void save_model(const QuantizerModel &model, const std::filesystem::path &p);
QuantizerModel load_model(const std::filesystem::path &p);

/// Same content as the binary file, for inspection.
std::string model_to_json(const QuantizerModel &model, int indent = 2);

std::string read_file(const std::filesystem::path &p);
void write_file(const std::filesystem::path &p, std::string_view bytes);

} // namespace mstk

#endif // MSTK_MODEL_IO_HPP_

//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MSTK_ELEMENTS_HPP_
#define MSTK_ELEMENTS_HPP_

#include <optional>
#include <string_view>

namespace mstk {

constexpr int kMaxAtomicNumber = 118;

/// Symbol for atomic number 1..118; empty view when out of range.
std::string_view element_symbol(int atomic_number);

/// Case-sensitive lookup ("Cl", not "CL").
std::optional<int> atomic_number(std::string_view symbol);

/// Single-bond covalent radius in Angstrom (Cordero et al. 2008 values;
/// 1.5 for elements the table does not cover).
double covalent_radius(int atomic_number);

} // namespace mstk

#endif // MSTK_ELEMENTS_HPP_

//
// mstk - Copyright 2026 The mstk Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <doctest.h>

#include "mstk/random.hpp"
#include "mstk/synth.hpp"
#include "mstk/vocab.hpp"

using namespace mstk;

namespace {

std::vector<std::string> names(const char *prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i)
    out.push_back(prefix + std::to_string(i));
  return out;
}

Vocab chem_vocab(int k) {
  return build_vocab({ "C", "H", "N", "O", "F" }, k, default_non_atom_symbols());
}

StructSequence random_sequence(Rng &rng, const Vocab &v) {
  StructSequence s;
  const int n = 1 + static_cast<int>(rng.index(30));
  for (int i = 0; i < n; ++i) {
    if (rng.uniform() < 0.6) {
      const auto &a = v.atom_symbols();
      s.push_back({ a[rng.index(a.size())],
                    static_cast<int>(rng.index(v.structural_size())) });
    } else {
      const auto &b = v.non_atom_symbols();
      s.push_back({ b[rng.index(b.size())], kNonAtomCode });
    }
  }
  return s;
}

std::string spelled(double c) {
  const auto t = tokenize_condition(c);
  return std::string(t.begin(), t.end());
}

} // namespace

TEST_SUITE("vocab") {

TEST_CASE("size formula") {
  CHECK(build_vocab(names("a", 5), 256, names("b", 10)).size() == 1305);
  CHECK(build_vocab(names("a", 5), 1, names("b", 10)).size() == 5 + 10 + 15);
  Rng rng(33);
  for (int t = 0; t < 20; ++t) {
    const int a = 1 + static_cast<int>(rng.index(12));
    const int k = 1 + static_cast<int>(rng.index(300));
    const int b = 1 + static_cast<int>(rng.index(20));
    const Vocab v = build_vocab(names("a", a), k, names("b", b));
    CHECK(v.size() == a * k + b + 12 + kSpecialCount);
    std::set<std::pair<std::string, int>> seen;
    for (int id = 0; id < v.size(); ++id) {
      const VocabEntry &e = v.entry(id);
      CHECK(seen.insert({ e.symbol, e.code }).second);
      switch (e.kind) {
      case VocabEntryKind::kAtom:
        CHECK(v.atom_id(e.symbol, e.code) == id);
        break;
      case VocabEntryKind::kNonAtom:
        CHECK(v.non_atom_id(e.symbol) == id);
        break;
      case VocabEntryKind::kCondition:
        CHECK(v.condition_id(e.symbol[0]) == id);
        break;
      case VocabEntryKind::kSpecial:
        CHECK((id == v.bos() || id == v.eos() || id == v.pad()));
        break;
      }
    }
  }
}

TEST_CASE("id layout") {
  const Vocab v = build_vocab({ "C", "O" }, 4, { "(", ")" });
  CHECK(v.atom_id("C", 0) == 0);
  CHECK(v.atom_id("C", 3) == 3);
  CHECK(v.atom_id("O", 0) == 4);
  CHECK(v.non_atom_id("(") == 8);
  CHECK(v.condition_id('0') == 10);
  CHECK(v.condition_id('-') == 21);
  CHECK(v.bos() == 22);
  CHECK(v.eos() == 23);
  CHECK(v.pad() == 24);
  CHECK(v.id({ "(", kNonAtomCode }) == 8);
  CHECK_THROWS_AS(v.atom_id("C", 4), Error);
  CHECK_THROWS_AS(v.atom_id("N", 0), Error);
  CHECK_THROWS_AS(v.entry(25), Error);
  CHECK_THROWS_AS(v.entry(-1), Error);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(build_vocab({ "C", "C" }, 4, { "(" }), Error);
  CHECK_THROWS_AS(build_vocab({ "C" }, 4, { "(", "(" }), Error);
  CHECK_THROWS_AS(build_vocab({}, 4, { "(" }), Error);
  CHECK_THROWS_AS(build_vocab({ "C" }, 4, {}), Error);
  CHECK_THROWS_AS(build_vocab({ "C" }, 0, { "(" }), Error);
}

TEST_CASE("encode example") {
  const Vocab v = chem_vocab(64);
  const StructSequence s { { "C", 32 }, { "O", 7 } };
  CHECK(encode_sequence(s, v)
        == std::vector<int> { v.bos(), v.atom_id("C", 32), v.atom_id("O", 7),
                              v.eos() });
  const StructSequence b1 { { "C", 1 }, { "(", -1 }, { "O", 2 } };
  const StructSequence b2 { { "C", 60 }, { "(", -1 }, { "O", 9 } };
  CHECK(encode_sequence(b1, v)[2] == encode_sequence(b2, v)[2]);
  CHECK(encode_sequence(b1, v)[2] == v.non_atom_id("("));
}

TEST_CASE("encode from a line sequence") {
  const Vocab v = chem_vocab(16);
  const auto p = parse_smiles("CO");
  std::vector<int> codes(p.molecule.num_atoms());
  for (std::size_t i = 0; i < codes.size(); ++i)
    codes[i] = static_cast<int>(i);
  const auto ids = encode_sequence(p.sequence, codes, v);
  CHECK(ids.size() == codes.size() + 2);
  CHECK(ids[1] == v.atom_id("C", 0));
  CHECK(ids[5] == v.atom_id("O", 4));
  std::vector<int> short_codes { 1 };
  CHECK_THROWS_AS(encode_sequence(p.sequence, short_codes, v), Error);
}

TEST_CASE("decode inverts encode") {
  const Vocab v = chem_vocab(32);
  Rng rng(71);
  for (int t = 0; t < 500; ++t) {
    const StructSequence s = random_sequence(rng, v);
    std::optional<double> cond;
    if (t % 2)
      cond = std::round(rng.uniform(-50, 50) * 100) / 100;
    auto ids = encode_sequence(s, v, cond);
    const DecodedIds d = decode_sequence(ids, v);
    CHECK(d.sequence == s);
    if (cond)
      CHECK(d.condition == spelled(*cond));
    else
      CHECK(d.condition.empty());
    ids.push_back(v.pad());
    ids.push_back(v.pad());
    CHECK(decode_sequence(ids, v).sequence == s);
  }
}

TEST_CASE("decode rejects malformed ids") {
  const Vocab v = chem_vocab(8);
  const int c = v.atom_id("C", 1);
  CHECK_THROWS_AS(decode_sequence(std::vector<int> { c, v.eos() }, v), Error);
  CHECK_THROWS_AS(decode_sequence(std::vector<int> { v.bos(), c }, v), Error);
  CHECK_THROWS_AS(decode_sequence(std::vector<int> { v.bos(), v.size(), v.eos() }, v),
                  Error);
  CHECK_THROWS_AS(
      decode_sequence(std::vector<int> { v.bos(), c, v.condition_id('1'), v.eos() },
                      v),
      Error);
  CHECK_THROWS_AS(
      decode_sequence(std::vector<int> { v.bos(), c, v.eos(), c }, v), Error);
}

TEST_CASE("condition tokens") {
  const auto t = tokenize_condition(-1.34);
  CHECK(t == std::vector<char> { '-', '1', '.', '3', '4' });
  CHECK(spelled(0) == "0.00");
  CHECK(spelled(12.5) == "12.50");
  CHECK(spelled(-0.001) == "0.00");
  CHECK(spelled(3.14159) == "3.14");
  CHECK_THROWS_AS(tokenize_condition(std::nan("")), Error);
  CHECK_THROWS_AS(tokenize_condition(std::numeric_limits<double>::infinity()),
                  Error);
}

TEST_CASE("struct line text") {
  const StructSequence s { { "C", 32 }, { "(", -1 }, { "O", 7 }, { ")", -1 },
                           { "Cl", 3 }, { ":", -1 } };
  const std::string line = format_struct_line(s);
  CHECK(line == "C:32 (:-1 O:7 ):-1 Cl:3 ::-1");
  const StructLine back = parse_struct_line(line);
  CHECK(back.sequence == s);
  CHECK_FALSE(back.condition);
  const StructLine c = parse_struct_line(format_struct_line(s, -1.34));
  REQUIRE(c.condition);
  CHECK(*c.condition == doctest::Approx(-1.34));
  CHECK(c.sequence == s);
  CHECK(format_struct_line(s, -1.34).rfind("cond=-1.34 ", 0) == 0);
  CHECK_THROWS_AS(parse_struct_line("C32"), Error);
  CHECK_THROWS_AS(parse_struct_line("C:x"), Error);
  CHECK_THROWS_AS(parse_struct_line("(:-2"), Error);
  CHECK(line_text(parse_struct_line("C:1 H:2 H:3 O:4 H:5").sequence) == "CO");
}

TEST_CASE("json round trip") {
  const Vocab v = chem_vocab(12);
  CHECK(Vocab::from_json(v.to_json()) == v);
  CHECK_THROWS(Vocab::from_json("{}"));
}

TEST_CASE("collected symbols") {
  std::vector<LineSequence> seqs { parse_smiles("CC(=O)O").sequence,
                                   parse_smiles("C#N").sequence };
  const auto [atoms, non_atoms] = collect_symbols(seqs);
  CHECK(atoms == std::vector<std::string> { "C", "H", "N", "O" });
  CHECK(non_atoms == std::vector<std::string> { "#", "(", ")", "=" });
  const auto d = default_non_atom_symbols();
  CHECK(std::find(d.begin(), d.end(), "9") != d.end());
  CHECK(std::find(d.begin(), d.end(), ":") != d.end());
}

} // TEST_SUITE

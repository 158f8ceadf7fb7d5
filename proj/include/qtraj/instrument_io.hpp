#pragma once

#include <string>

#include "qtraj/instrument.hpp"

namespace qtraj {

// Instrument spec file, JSON. Two equivalent forms:
//
//   { "dim": 2,
//     "perfect_ops": [ {"name": "V1", "matrix": [[[re,im],...],...]}, ... ],
//     "eta": [[0.9, 0.1], [0.1, 0.9]],          // optional; identity if absent
//     "labels": ["1", "2"] }                    // optional row labels
//
//   { "dim": 2,
//     "outcomes": [ {"label": "a", "kraus": [matrix, ...]}, ... ] }
//
// Matrices are row-major lists of [re, im] pairs. Doubles are serialized
// with shortest round-trip formatting, so load -> save -> load is bit-exact.
struct InstrumentFile {
  Instrument instrument;
  // Present only in perfect_ops form; needed by the non-darkness falsifier.
  std::vector<CMatrix> perfect_ops;
  std::optional<RMatrix> eta;
};

InstrumentFile load_instrument(const std::string& path);
InstrumentFile parse_instrument(const std::string& json_text);

std::string serialize_instrument(const InstrumentFile& f);
void save_instrument(const InstrumentFile& f, const std::string& path);

// FNV-1a over the canonical serialization; recorded in output metadata.
std::uint64_t instrument_hash(const InstrumentFile& f);

}  // namespace qtraj

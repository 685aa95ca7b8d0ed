#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hct/mda.hpp"
#include "hct/pwohg.hpp"

namespace hct {

// A mode map component pairs a set of source modes with the set of target
// modes whose slice structure the map carries it into.
struct Mmc {
  std::vector<size_t> source_modes;
  std::vector<size_t> target_modes;
  bool operator==(const Mmc&) const = default;
};

// Structure-preserving transformation between two arrays, materialized as the
// set of (source index, target index) pairs. The underlying function runs in
// whichever direction the relation is single-valued; unfold, for instance, is
// a function from patch positions back onto pixels.
struct ModeMap {
  std::string kind;  // unfold | permute | flatten | reshape | collapse | custom
  Shape source;
  Shape target;
  std::vector<std::pair<int64_t, int64_t>> pairs;  // (source flat, target flat)
  std::vector<Mmc> components;

  // kind-specific parameters, kept for the intensional JSON form
  std::vector<int64_t> patch, stride, perm;

  std::string to_json() const;
  static ModeMap from_json(const std::string& text);
};

struct ModeMapReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Checks every component: slices of the function's domain modes must land
// inside single slices of the codomain modes.
ModeMapReport verify_mode_map(const ModeMap& m);

// Patch extraction for convolution, valid padding: (C,H,W) ->
// (C,h',w',p_h,p_w) with h' = floor((H-p_h)/s_h)+1. Overlapping patches make
// the underlying patch->pixel function non-injective.
ModeMap unfold(const Shape& image, const std::vector<int64_t>& patch,
               const std::vector<int64_t>& stride);

ModeMap permute(const Shape& source, const std::vector<size_t>& perm);
ModeMap flatten(const Shape& source);
ModeMap reshape(const Shape& source, const Shape& target);

// Applies the map in the source -> target direction; every target position
// must be written at most once. Unwritten positions come out absent.
Mda apply(const ModeMap& m, const Mda& source_data);

// Applies the map in the target -> source direction under the same rule.
Mda apply_reverse(const ModeMap& m, const Mda& target_data);

struct NonInjectiveDecomposition {
  GenTensor index_gt;   // injective array of position codes
  Mda index_mda;        // the same array in value form
  Mda value_vector;     // deduplicated values, order 1
  ModeMap collapse;     // positions -> value-vector entries
};

// Any array with duplicate values factors through an injective index tensor
// and a collapsing map onto its distinct values.
NonInjectiveDecomposition noninjective_as_modemap(const Mda& m);

// Composition along matching shapes; components chain where the mode sets
// line up.
std::optional<ModeMap> compose(const ModeMap& first, const ModeMap& second);

}  // namespace hct

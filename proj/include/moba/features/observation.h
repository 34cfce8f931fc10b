#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "moba/env/game.h"

namespace moba::features {

enum class Range { kUnit, kSigned };  // [0,1] or [-1,1]

struct FieldSpec {
  std::string name;
  double min = 0;
  double max = 1;
  Range range = Range::kUnit;
  // Out-of-range inputs saturate when true; otherwise they are passed
  // through the affine map unchanged.
  bool clamp = true;
};

// Affine map of `raw` from [min, max] into the field's declared range.
double normalize_field(double raw, const FieldSpec& spec);

// The (f_i, f_u, f_g) triple for one side, in that side's mirrored frame.
struct Observation {
  static constexpr int kImageChannels = 2;

  int image_size = 0;
  std::vector<float> image;  // [channel][row][col]
  int unit_width = 0;
  std::vector<float> units;  // one row of unit_width per registry slot
  std::vector<env::UnitType> unit_types;
  std::vector<float> global;
  // World unit id held by each attention slot. Slot 0 is the own hero.
  std::vector<int> unit_registry;

  size_t num_units() const { return unit_types.size(); }
  std::span<const float> unit(size_t slot) const {
    return {units.data() + slot * unit_width, static_cast<size_t>(unit_width)};
  }
  // Equality of the feature tensors (registry ids are world-specific).
  bool same_features(const Observation& other) const;
};

class FeatureExtractor {
 public:
  explicit FeatureExtractor(const env::Game& game, int image_size = 16);

  Observation extract(const env::WorldState& state, int side) const;

  static const std::vector<FieldSpec>& unit_fields();
  static const std::vector<FieldSpec>& global_fields();
  int image_size() const { return image_size_; }
  int unit_width() const { return static_cast<int>(unit_fields().size()); }
  int global_width() const { return static_cast<int>(global_fields().size()); }

  // Self-describing schema: one line per field with section, index, name and
  // declared range.
  void write_manifest(std::ostream& out) const;

 private:
  const env::Game& game_;
  int image_size_;
};

}  // namespace moba::features

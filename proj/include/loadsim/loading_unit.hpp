#pragma once

#include <algorithm>
#include <cmath>

#include "loadsim/table.hpp"
#include "loadsim/units.hpp"

namespace loadsim {

// Linkage reduced to mechanical-advantage tables: cylinder force per unit of
// vertical force at the bucket, as a function of cylinder extension.
struct LinkageSpec {
  LinearTable lift_ratio;  // extension m -> ratio
  LinearTable tilt_ratio;
  double arm_equiv_mass = 0.0;  // kg at the bucket reference point
  double max_payload = 0.0;     // kg

  void validate() const {
    if (lift_ratio.empty()) throw SpecError("linkage.lift_ratio", "missing");
    if (tilt_ratio.empty()) throw SpecError("linkage.tilt_ratio", "missing");
    if (lift_ratio.min_y() <= 0.0) throw SpecError("linkage.lift_ratio", "ratios must be > 0");
    if (tilt_ratio.min_y() <= 0.0) throw SpecError("linkage.tilt_ratio", "ratios must be > 0");
    if (!(arm_equiv_mass > 0.0)) throw SpecError("linkage.arm_equiv_mass", "must be > 0");
    if (!(max_payload > 0.0)) throw SpecError("linkage.max_payload", "must be > 0");
  }

  double max_lift_ratio() const { return lift_ratio.max_y(); }
  double min_lift_ratio() const { return lift_ratio.min_y(); }
};

// Granular pile: quadratic penetration resistance plus a vertical share that
// presses the bucket down, and a bucket-fill rate heuristic.
struct PileSpec {
  double k0 = 0.0;         // N
  double k1 = 0.0;         // N/m
  double k2 = 0.0;         // N/m^2
  double vert_frac = 0.0;  // [0,1)
  double fill_rate = 0.0;  // kg per m of engaged advance
  double pile_face_x = 0.0;

  void validate() const {
    if (k0 < 0.0 || k1 < 0.0 || k2 < 0.0) throw SpecError("pile.k", "coefficients must be >= 0");
    if (!(k1 + k2 > 0.0)) throw SpecError("pile.k", "k1 + k2 must be > 0");
    if (!(vert_frac >= 0.0 && vert_frac < 1.0)) throw SpecError("pile.vert_frac", "must be in [0,1)");
    if (!(fill_rate > 0.0)) throw SpecError("pile.fill_rate", "must be > 0");
  }
};

struct BucketState {
  double payload = 0.0;  // kg
  double depth = 0.0;    // m penetration
};

// Lift-cylinder force required to hold arm plus payload.
inline double lift_load_force(const LinkageSpec& linkage, double x_lift, double payload) {
  return (payload + linkage.arm_equiv_mass) * units::kGravity * linkage.lift_ratio(x_lift);
}

struct PileForces {
  double horizontal = 0.0;  // N, opposing penetration
  double vertical = 0.0;    // N, downward on the bucket
};

inline PileForces pile_resistance(const PileSpec& pile, double depth) {
  PileForces f;
  if (depth > 0.0) {
    f.horizontal = pile.k0 + pile.k1 * depth + pile.k2 * depth * depth;
    f.vertical = pile.vert_frac * f.horizontal;
  }
  return f;
}

// Advance is this step's forward motion while in the pile; material is only
// gathered while the tilt function is engaged.
inline BucketState bucket_fill_step(const PileSpec& pile, const LinkageSpec& linkage,
                                    BucketState bucket, double position, double advance,
                                    bool tilt_engaged, double /*dt*/) {
  if (tilt_engaged && advance > 0.0 && bucket.depth > 0.0)
    bucket.payload = std::min(bucket.payload + pile.fill_rate * advance, linkage.max_payload);
  bucket.depth = std::max(0.0, position - pile.pile_face_x);
  return bucket;
}

}  // namespace loadsim

#pragma once

#include "alef/geometry_cache.hpp"
#include "alef/operators.hpp"

#include <random>

namespace alef {

enum class DataFamily { gaussian, tt_bump, kernel, power_tail, kink, neck };

DataFamily parse_family(const std::string& name);
std::string family_name(DataFamily f);

struct DataParams {
    DataFamily family = DataFamily::gaussian;
    double amplitude = 1e-2;
    double width = 1.0;
    double center = 0.0;
    double tail_exponent = 0.0; // power_tail: 0 means n/2 + 0.2
};

/// Build initial perturbation data; profiles are functions of the geodesic
/// distance s, made even across a smooth center by mirroring.
/// The kernel family is resolved by the caller (needs the spectral basis).
TensorField make_initial_data(const GeometryCache& geo, const ComponentLayout& lay,
                              const DataParams& p);

/// Project h onto its transverse-traceless part: subtract a Lie derivative
/// along a radial field and a conformal part so that trace and divergence
/// vanish to discretization order.
TensorField tt_project(const GeometryCache& geo, const TensorField& h);

/// Smooth random invariant field supported in the bulk (away from both
/// boundaries), normalized to unit L2 norm. Deterministic in the seed.
TensorField random_smooth_field(const GeometryCache& geo, const ComponentLayout& lay,
                                unsigned seed);

/// Linear interpolation of a field between two grids of the same background
/// (matched by radius); used to carry spectral kernel bases onto flow grids.
TensorField interpolate_field(const GeometryCache& src, const TensorField& f,
                              const GeometryCache& dst);

} // namespace alef

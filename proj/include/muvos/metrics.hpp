#pragma once

#include <cstddef>
#include <vector>

#include "muvos/object_mask.hpp"

namespace muvos {

inline constexpr double kDefaultBoundaryToleranceFraction = 0.008;

/// Tolerance in pixels: fraction of the image diagonal.
double boundary_tolerance(std::size_t height, std::size_t width,
                          double fraction = kDefaultBoundaryToleranceFraction);

/// Region similarity |pred ∩ gt| / |pred ∪ gt| for one object; 1 when both are empty.
double jaccard_j(const ObjectMask& pred, const ObjectMask& gt, int object_id);

/// Object pixels with at least one 4-neighbour outside the object (the image
/// border counts as outside). Row-major H*W flags.
std::vector<bool> boundary_pixels(const ObjectMask& m, int object_id);

/// Boundary F-measure. A boundary pixel counts as matched when a boundary pixel of
/// the other mask lies within `tolerance_px` (Euclidean); this is the dilation
/// approximation of a one-to-one matching.
double boundary_f(const ObjectMask& pred, const ObjectMask& gt, int object_id, double tolerance_px);

/// Same measure with an exact maximum-cardinality bipartite matching between the
/// two boundary sets. Cubic worst case; used for validation.
double boundary_f_exact(const ObjectMask& pred, const ObjectMask& gt, int object_id, double tolerance_px);

}  // namespace muvos

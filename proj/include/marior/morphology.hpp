#pragma once

#include "marior/raster.hpp"

namespace marior {

// Largest 8-connected foreground component. Ties go to the component whose
// first pixel comes first in raster order. Empty input yields an empty mask.
BinaryMask largest_component(const BinaryMask& mask);

// Sets every background pixel that is not 4-connected to the image border.
BinaryMask fill_holes(const BinaryMask& mask);

// Binary dilation/erosion with a disk of the given radius; pixels beyond
// the border replicate the nearest edge pixel.
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask close(const BinaryMask& mask, int radius);

// Foreground pixels with at least one 4-neighbour in the background
// (out-of-range neighbours count as background).
BinaryMask inner_boundary(const BinaryMask& mask);

}  // namespace marior

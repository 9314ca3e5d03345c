#pragma once

#include <string>

#include "henonlab/slices.hpp"

namespace henonlab::app {

/// 8-bit RGB PNG of the image under the default palette. No time or text
/// chunks are written, so equal images give equal bytes.
std::string encode_png(const SliceImage& img);

}  // namespace henonlab::app

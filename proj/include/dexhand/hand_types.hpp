#pragma once

#include <array>
#include <string>

namespace dexhand {

/// Fixed finger identity order; index is the reference finger for the
/// width solve.
enum class Finger { Thumb = 0, Index = 1, Middle = 2, Ring = 3, Pinky = 4 };

inline constexpr std::array<Finger, 5> kAllFingers = {
    Finger::Thumb, Finger::Index, Finger::Middle, Finger::Ring, Finger::Pinky};

const char* to_string(Finger f);

/// Parses "thumb"/"index"/..., throws std::invalid_argument on anything else.
Finger finger_from_string(const std::string& name);

}  // namespace dexhand

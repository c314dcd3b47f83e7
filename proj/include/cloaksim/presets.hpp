#pragma once

#include "cloaksim/coeff.hpp"
#include "cloaksim/geometry.hpp"

#include <string>
#include <vector>

namespace cloaksim {

/// Key with optional numeric arguments, e.g. "regular-cloak(0.1)" → {"regular-cloak", {0.1}}.
struct PresetKey {
    std::string name;
    std::vector<double> args;

    /// Throws PreconditionError on malformed input.
    static PresetKey parse(const std::string& text);
};

/// Inclusion coefficients placed inside cloaks:
///   "identity", "<c>I" (c·I), "isotropic-sin" (2+sin t), "sin<c>" (c·(2+sin t)),
///   "expr:<scalar in x,y,r,theta,t>" (isotropic, constants sampled on B₂ × [−5,5]).
CoefficientField make_inclusion(const std::string& key);

/// Named 2D fields:
///   identity, isotropic-sin, regular-cloak(r), truncated-singular-cloak(rho),
///   homogenized-radial(R,eta), isotropic-cloak(R,eta,eps), laminate(a,b,eps),
/// plus any inclusion key. Cloak presets hide `inclusion`.
CoefficientField make_preset(const std::string& key, const std::string& inclusion = "identity");

std::vector<std::string> preset_names();

/// "identity", "regular:<r>", "singular", "dilation:<c>".
DiffMap make_map(const std::string& key);

}  // namespace cloaksim

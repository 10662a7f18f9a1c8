#pragma once
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <pdeabcd/assembly.hpp>
#include <pdeabcd/dual_solver.hpp>

namespace pdeabcd {

/// Named test instance: analytic data fields plus parameters.
struct Preset {
    std::string name;
    ScalarField y_d;
    ScalarField y_r;
    double alpha;
    double beta;
    Box box;
    EllipticCoefficients coefficients;
};

std::vector<std::string> preset_names();

/// zero, sine or shifted. Throws DomainError for anything else.
Preset preset_by_name(std::string_view name);

struct PresetOverrides {
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<Box> box;
    std::optional<double> gamma;
    AugmentedOptions solver;
};

/// Mesh + assembly + interpolation of y_d, y_r restricted to interior nodes.
ProblemInstance instantiate(const Preset& preset, int level, const PresetOverrides& overrides = {});
ProblemInstance instantiate(const Preset& preset, std::shared_ptr<const FemOperators> ops,
                            const PresetOverrides& overrides = {});

} // namespace pdeabcd

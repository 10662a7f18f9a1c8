#include <pdeabcd/presets.hpp>

#include <cmath>
#include <numbers>

namespace pdeabcd {

std::vector<std::string> preset_names() { return {"zero", "sine", "shifted"}; }

Preset preset_by_name(std::string_view name)
{
    const auto zero = [](const Point2&) { return 0.0; };
    if (name == "zero") {
        return {"zero", zero, zero, 1e-2, 1e-2, {0.0, 0.0}, {}};
    }
    if (name == "sine") {
        const auto yd = [](const Point2& x) {
            return std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]);
        };
        return {"sine", yd, zero, 1e-2, 1e-2, {-1.0, 1.0}, {}};
    }
    if (name == "shifted") {
        const auto yd = [](const Point2& x) { return x[0] + x[1]; };
        const auto one = [](const Point2&) { return 1.0; };
        return {"shifted", yd, one, 1e-3, 5e-3, {-0.5, 0.5}, {}};
    }
    throw DomainError("unknown preset '" + std::string(name) + "'");
}

ProblemInstance instantiate(const Preset& preset, std::shared_ptr<const FemOperators> ops,
                            const PresetOverrides& overrides)
{
    const Mesh& mesh = ops->mesh();
    Vector yd = restrict_interior(mesh, interpolate_function(mesh, preset.y_d));
    Vector yr = restrict_interior(mesh, interpolate_function(mesh, preset.y_r));
    return ProblemInstance(std::move(ops), overrides.alpha.value_or(preset.alpha), overrides.beta.value_or(preset.beta),
                           overrides.box.value_or(preset.box), std::move(yd), std::move(yr),
                           overrides.gamma.value_or(kGammaPlanar), overrides.solver);
}

ProblemInstance instantiate(const Preset& preset, int level, const PresetOverrides& overrides)
{
    auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(level));
    return instantiate(preset, assemble(std::move(mesh), preset.coefficients), overrides);
}

} // namespace pdeabcd

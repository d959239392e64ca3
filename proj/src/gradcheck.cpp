#include "stegcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "stegcnn/rng.hpp"

namespace stegcnn {

bool GradCheckReport::passed() const noexcept {
    return std::all_of(classes.begin(), classes.end(), [](const ParamClassCheck& c) { return c.passed; });
}

std::vector<std::string> parameter_classes(const NetworkSpec& spec) {
    const ParameterStore store(spec);
    std::vector<std::string> names(store.size());
    auto label = [&](std::span<const double> part, const std::string& name) {
        const auto first = static_cast<std::size_t>(part.data() - store.values().data());
        std::fill_n(names.begin() + static_cast<std::ptrdiff_t>(first), part.size(), name);
    };
    for (std::size_t l = 0; l < spec.conv_layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l + 1);
        for (int k = 0; k < spec.conv_layers[l].kernel_count; ++k) label(store.kernel_weights(l, k), prefix + ".weights");
        label(store.layer_biases(l), prefix + ".bias");
    }
    for (int c = 0; c < NetworkSpec::output_classes; ++c) label(store.output_weights(c), "output.weights");
    label(store.output_biases(), "output.bias");
    return names;
}

double relative_error(double analytic, double numeric) noexcept {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

GradCheckReport gradient_check(int input_size, std::uint64_t seed, const GradCheckOptions& opts) {
    if (!(opts.step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const NetworkSpec spec = desk_network_spec(input_size, opts.wide_kernels);
    ParameterStore params = build_network(spec, seed);
    Xoshiro256 rng{mix_seed(seed, 1)};
    for (double& v : params.values()) v += 0.1 * rng.normal();
    ImageGrid image(input_size, input_size);
    for (double& v : image.values()) v = rng.normal();
    const int label = static_cast<int>(rng.below(2));

    ParameterStore grads = backward(params, spec, image, label);
    const auto names = parameter_classes(spec);
    if (opts.fault_class) {
        const auto it = std::find(names.begin(), names.end(), *opts.fault_class);
        if (it == names.end()) throw std::invalid_argument("unknown parameter class '" + *opts.fault_class + "'");
        grads.values()[static_cast<std::size_t>(it - names.begin())] += opts.fault;
    }

    GradCheckReport report{input_size, seed, opts.tolerance, {}};
    for (std::size_t i = 0; i < params.size(); ++i) {
        double& w = params.values()[i];
        const double saved = w;
        w = saved + opts.step;
        const double up = loss(forward(params, spec, image), label);
        w = saved - opts.step;
        const double down = loss(forward(params, spec, image), label);
        w = saved;
        const double err = relative_error(grads.values()[i], (up - down) / (2.0 * opts.step));

        if (report.classes.empty() || report.classes.back().name != names[i]) report.classes.push_back({names[i]});
        ParamClassCheck& cls = report.classes.back();
        ++cls.checked;
        if (err > cls.worst_rel_error || cls.checked == 1) {
            cls.worst_rel_error = err;
            cls.worst_index = i;
        }
        cls.passed = cls.passed && err < opts.tolerance;
    }
    return report;
}

std::string format_gradcheck(const GradCheckReport& report) {
    std::string out = "# gradient check: input " + std::to_string(report.input_size) + "x" +
                      std::to_string(report.input_size) + ", seed " + std::to_string(report.seed) + "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %8s %14s %s\n", "class", "checked", "worst_rel_err", "status");
    out += line;
    for (const auto& c : report.classes) {
        std::snprintf(line, sizeof line, "%-16s %8zu %14.3e %s\n", c.name.c_str(), c.checked, c.worst_rel_error,
                      c.passed ? "PASS" : "FAIL");
        out += line;
    }
    std::snprintf(line, sizeof line, "tolerance %.1e: %s\n", report.tolerance, report.passed() ? "PASS" : "FAIL");
    out += line;
    return out;
}

}  // namespace stegcnn

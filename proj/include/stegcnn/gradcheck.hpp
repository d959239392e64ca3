#pragma once

// Central finite-difference check of backward() on a random desk network,
// grouped by parameter class (conv weights/biases per layer, output weights/biases).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stegcnn/network.hpp"

namespace stegcnn {

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    int wide_kernels = 3;
    /// Test hook: add `fault` to the analytic gradient of the first parameter
    /// of the named class before comparing.
    std::optional<std::string> fault_class;
    double fault = 1e-2;
};

struct ParamClassCheck {
    std::string name;
    std::size_t checked = 0;
    double worst_rel_error = 0.0;
    std::size_t worst_index = 0;  // flat index into the ParameterStore
    bool passed = true;
};

struct GradCheckReport {
    int input_size = 0;
    std::uint64_t seed = 0;
    double tolerance = 0.0;
    std::vector<ParamClassCheck> classes;

    bool passed() const noexcept;
};

/// Class name of every flat parameter index, e.g. "layer1.weights", "output.bias".
std::vector<std::string> parameter_classes(const NetworkSpec& spec);

/// |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric) noexcept;

/// Random network (standard init plus small noise on every parameter, so
/// biases are non-zero) and a random normal input image of side `input_size`.
GradCheckReport gradient_check(int input_size, std::uint64_t seed, const GradCheckOptions& opts = {});

std::string format_gradcheck(const GradCheckReport& report);

}  // namespace stegcnn

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgdk/numerics.hpp"

namespace pgdk {

// Hidden activations must stay twice differentiable (tanh or identity), the
// whole pipeline differentiates through these nets twice conceptually
// (gradient of a loss of a gradient never appears, but every loss below is a
// square of net outputs).
enum class Activation { Tanh, Identity };
enum class OutputActivation { Identity, ScaledTanh };

struct MlpSpec {
    std::vector<int> widths;  // input width first, output width last
    Activation hidden = Activation::Tanh;
    OutputActivation output = OutputActivation::Identity;
    double bound = 1.0;  // scaled_tanh: y = bound * tanh(z)

    int input_width() const { return widths.front(); }
    int output_width() const { return widths.back(); }
    int param_count() const;
    void validate() const;
};

// All weights and biases in one flat vector, layer by layer: weights
// row-major, then biases. The updates treat parameters as a single
// Euclidean vector.
struct MlpParams {
    Vector flat;
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

Vector forward(const MlpSpec& spec, const MlpParams& params, const Vector& x);

struct VjpResult {
    Vector grad_params;  // cotangent' * d(output)/d(params)
    Vector grad_input;   // cotangent' * d(output)/d(input)
};

VjpResult vjp(const MlpSpec& spec, const MlpParams& params, const Vector& x,
              const Vector& cotangent);

// Checkpoint: one plain-text header line (widths + activation names), then
// the raw little-endian doubles. Round-trips bit-exact.
void save_mlp(const std::string& path, const MlpSpec& spec, const MlpParams& params);
std::pair<MlpSpec, MlpParams> load_mlp(const std::string& path);

}  // namespace pgdk

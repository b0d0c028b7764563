#include "pgdk/neural.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pgdk/errors.hpp"
#include "pgdk/rng.hpp"

namespace pgdk {

int MlpSpec::param_count() const {
    int count = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        count += widths[l + 1] * widths[l] + widths[l + 1];
    return count;
}

void MlpSpec::validate() const {
    if (widths.size() < 2) throw InvalidInput("MlpSpec: need at least input and output widths");
    for (int w : widths)
        if (w < 1) throw InvalidInput("MlpSpec: all widths must be >= 1");
    if (output == OutputActivation::ScaledTanh && !(bound > 0.0))
        throw InvalidInput("MlpSpec: scaled_tanh bound must be positive");
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(splitmix64(seed));
    Vector flat = Vector::Zero(spec.param_count());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const int fan_in = spec.widths[l];
        const int fan_out = spec.widths[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (int i = 0; i < fan_out * fan_in; ++i) flat(pos++) = dist(rng);
        pos += fan_out;  // biases stay zero
    }
    return MlpParams{std::move(flat)};
}

namespace {

struct Tape {
    // a[0] = x, a[l+1] = activation(W_l a[l] + b_l); z pre-activations
    std::vector<Vector> a;
    std::vector<Vector> z;
};

Vector run_forward(const MlpSpec& spec, const MlpParams& params, const Vector& x, Tape* tape) {
    spec.validate();
    if (x.size() != spec.input_width())
        throw InvalidInput("forward: input length does not match spec input width");
    if (params.flat.size() != spec.param_count())
        throw InvalidInput("forward: parameter count does not match spec");

    const std::size_t n_layers = spec.widths.size() - 1;
    Vector a = x;
    if (tape) tape->a.push_back(a);
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int rows = spec.widths[l + 1];
        const int cols = spec.widths[l];
        Eigen::Map<const Matrix> W(params.flat.data() + pos, rows, cols);
        pos += static_cast<Eigen::Index>(rows) * cols;
        Eigen::Map<const Vector> b(params.flat.data() + pos, rows);
        pos += rows;
        Vector z = W * a + b;
        if (tape) tape->z.push_back(z);
        const bool last = (l + 1 == n_layers);
        if (!last) {
            a = (spec.hidden == Activation::Tanh) ? Vector(z.array().tanh()) : z;
        } else {
            a = (spec.output == OutputActivation::ScaledTanh)
                    ? Vector(spec.bound * z.array().tanh())
                    : z;
        }
        if (tape) tape->a.push_back(a);
    }
    return a;
}

}  // namespace

Vector forward(const MlpSpec& spec, const MlpParams& params, const Vector& x) {
    return run_forward(spec, params, x, nullptr);
}

VjpResult vjp(const MlpSpec& spec, const MlpParams& params, const Vector& x,
              const Vector& cotangent) {
    if (cotangent.size() != spec.output_width())
        throw InvalidInput("vjp: cotangent length does not match spec output width");
    Tape tape;
    run_forward(spec, params, x, &tape);

    const std::size_t n_layers = spec.widths.size() - 1;
    Vector grad_params = Vector::Zero(spec.param_count());

    // Backprop. d holds the cotangent w.r.t. the pre-activation z of the
    // current layer.
    Vector d;
    {
        const Vector& z = tape.z.back();
        if (spec.output == OutputActivation::ScaledTanh) {
            Vector t = z.array().tanh();
            d = (cotangent.array() * spec.bound * (1.0 - t.array().square())).matrix();
        } else {
            d = cotangent;
        }
    }

    // Offsets of each layer's parameter block.
    std::vector<Eigen::Index> offsets(n_layers);
    {
        Eigen::Index pos = 0;
        for (std::size_t l = 0; l < n_layers; ++l) {
            offsets[l] = pos;
            pos += static_cast<Eigen::Index>(spec.widths[l + 1]) * spec.widths[l] + spec.widths[l + 1];
        }
    }

    for (std::size_t li = n_layers; li-- > 0;) {
        const int rows = spec.widths[li + 1];
        const int cols = spec.widths[li];
        const Vector& a_prev = tape.a[li];
        Eigen::Map<Matrix> gW(grad_params.data() + offsets[li], rows, cols);
        Eigen::Map<Vector> gb(grad_params.data() + offsets[li] + static_cast<Eigen::Index>(rows) * cols, rows);
        gW = d * a_prev.transpose();
        gb = d;
        Eigen::Map<const Matrix> W(params.flat.data() + offsets[li], rows, cols);
        Vector da = W.transpose() * d;
        if (li > 0) {
            if (spec.hidden == Activation::Tanh) {
                const Vector& a_here = tape.a[li];  // tanh(z_{li-1})
                d = (da.array() * (1.0 - a_here.array().square())).matrix();
            } else {
                d = da;
            }
        } else {
            return VjpResult{std::move(grad_params), std::move(da)};
        }
    }
    // single-layer nets return inside the loop
    throw Error("vjp: unreachable");
}

namespace {

std::string activation_name(Activation a) {
    return a == Activation::Tanh ? "tanh" : "identity";
}
std::string output_name(OutputActivation a) {
    return a == OutputActivation::ScaledTanh ? "scaled_tanh" : "identity";
}

}  // namespace

void save_mlp(const std::string& path, const MlpSpec& spec, const MlpParams& params) {
    spec.validate();
    if (params.flat.size() != spec.param_count())
        throw InvalidInput("save_mlp: parameter count does not match spec");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_mlp: cannot open " + path);
    out << "mlp " << spec.widths.size();
    for (int w : spec.widths) out << ' ' << w;
    out << ' ' << activation_name(spec.hidden) << ' ' << output_name(spec.output) << '\n';
    if (spec.output == OutputActivation::ScaledTanh)
        out.write(reinterpret_cast<const char*>(&spec.bound), sizeof(double));
    out.write(reinterpret_cast<const char*>(params.flat.data()),
              static_cast<std::streamsize>(params.flat.size() * sizeof(double)));
    if (!out) throw Error("save_mlp: write failed for " + path);
}

std::pair<MlpSpec, MlpParams> load_mlp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_mlp: cannot open " + path);
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic;
    std::size_t n_widths = 0;
    hs >> magic >> n_widths;
    if (magic != "mlp" || n_widths < 2) throw ParseError("load_mlp: bad header in " + path);
    MlpSpec spec;
    spec.widths.resize(n_widths);
    for (auto& w : spec.widths) hs >> w;
    std::string hidden, output;
    hs >> hidden >> output;
    if (!hs) throw ParseError("load_mlp: truncated header in " + path);
    if (hidden == "tanh") spec.hidden = Activation::Tanh;
    else if (hidden == "identity") spec.hidden = Activation::Identity;
    else throw ParseError("load_mlp: unknown hidden activation '" + hidden + "'");
    if (output == "scaled_tanh") spec.output = OutputActivation::ScaledTanh;
    else if (output == "identity") spec.output = OutputActivation::Identity;
    else throw ParseError("load_mlp: unknown output activation '" + output + "'");
    if (spec.output == OutputActivation::ScaledTanh) {
        in.read(reinterpret_cast<char*>(&spec.bound), sizeof(double));
        if (!in) throw ParseError("load_mlp: missing bound in " + path);
    }
    spec.validate();
    MlpParams params{Vector::Zero(spec.param_count())};
    in.read(reinterpret_cast<char*>(params.flat.data()),
            static_cast<std::streamsize>(params.flat.size() * sizeof(double)));
    if (!in) throw ParseError("load_mlp: truncated parameter block in " + path);
    return {spec, std::move(params)};
}

}  // namespace pgdk

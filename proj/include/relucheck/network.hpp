#pragma once

// Feed-forward ReLU network model: NNet text ingestion, evaluation,
// activation patterns, and input gradients.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "relucheck/linalg.hpp"

namespace relucheck {

// Names a hidden unit: `layer` indexes hidden layers only (0-based).
struct NeuronId {
    std::size_t layer = 0;
    std::size_t index = 0;

    friend bool operator==(const NeuronId& a, const NeuronId& b) {
        return a.layer == b.layer && a.index == b.index;
    }
    friend bool operator<(const NeuronId& a, const NeuronId& b) {
        return a.layer != b.layer ? a.layer < b.layer : a.index < b.index;
    }
};

// Complete phase assignment over hidden neurons, flattened layer-major.
// active[i] == 1 means the neuron is on its identity branch.
struct ActivationPattern {
    std::vector<std::uint8_t> active;

    bool operator==(const ActivationPattern& o) const { return active == o.active; }
};

struct LayerParams {
    Matrix weights;
    Vec bias;
    bool has_relu = true;
};

// Input normalization block of the NNet format. Parsed and retained but
// never applied implicitly; callers opt in via Network::normalize_input.
struct Normalization {
    Vec input_min;
    Vec input_max;
    Vec mean;   // per input, plus one trailing output entry when present
    Vec range;  // same layout as mean
};

class NnetParseError : public std::runtime_error {
public:
    NnetParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(msg + " at line " + std::to_string(line)), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class Network {
public:
    Network(std::vector<LayerParams> layers, Normalization norm = {})
        : layers_(std::move(layers)), norm_(std::move(norm)) {
        validate();
        input_dim_ = layers_.front().weights.cols;
        output_dim_ = layers_.back().weights.rows;
        for (std::size_t k = 0; k + 1 < layers_.size(); ++k)
            hidden_offsets_.push_back(hidden_count_), hidden_count_ += layers_[k].weights.rows;
    }

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    std::size_t layer_count() const { return layers_.size(); }
    std::size_t hidden_layer_count() const { return layers_.size() - 1; }
    std::size_t hidden_width(std::size_t layer) const { return layers_[layer].weights.rows; }
    std::size_t hidden_count() const { return hidden_count_; }
    const LayerParams& layer(std::size_t k) const { return layers_[k]; }
    const Normalization& normalization() const { return norm_; }

    // Flattened index of a hidden neuron (layer-major).
    std::size_t hidden_index(NeuronId id) const { return hidden_offsets_[id.layer] + id.index; }
    NeuronId neuron_at(std::size_t flat) const {
        std::size_t layer = 0;
        while (layer + 1 < hidden_offsets_.size() && hidden_offsets_[layer + 1] <= flat) ++layer;
        return NeuronId{layer, flat - hidden_offsets_[layer]};
    }

    Vec evaluate(const Vec& x) const {
        check_input(x);
        Vec h = x;
        for (const auto& lp : layers_) {
            Vec z = lp.weights.apply(h);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += lp.bias[i];
            if (lp.has_relu)
                for (double& v : z) v = std::max(0.0, v);
            h = std::move(z);
        }
        return h;
    }

    // Pre-activation exactly 0 is classified Inactive so the pattern always
    // names the linear piece the output coincides with.
    std::pair<Vec, ActivationPattern> evaluate_with_pattern(const Vec& x) const {
        check_input(x);
        ActivationPattern pat;
        pat.active.reserve(hidden_count_);
        Vec h = x;
        for (const auto& lp : layers_) {
            Vec z = lp.weights.apply(h);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += lp.bias[i];
            if (lp.has_relu) {
                for (double& v : z) {
                    pat.active.push_back(v > 0.0 ? 1 : 0);
                    v = std::max(0.0, v);
                }
            }
            h = std::move(z);
        }
        return {std::move(h), std::move(pat)};
    }

    // Gradient of objective . f at x under the activation pattern fixed at x.
    // Subgradient 0 is used at pre-activations exactly 0.
    Vec input_gradient(const Vec& x, const Vec& objective) const {
        check_input(x);
        if (objective.size() != output_dim_)
            throw std::invalid_argument("objective dimension mismatch");
        std::vector<Vec> pre(layers_.size());
        Vec h = x;
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            Vec z = layers_[k].weights.apply(h);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += layers_[k].bias[i];
            pre[k] = z;
            if (layers_[k].has_relu)
                for (double& v : z) v = std::max(0.0, v);
            h = std::move(z);
        }
        Vec g = objective;
        for (std::size_t k = layers_.size(); k-- > 0;) {
            if (layers_[k].has_relu)
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (pre[k][i] <= 0.0) g[i] = 0.0;
            const Matrix& w = layers_[k].weights;
            Vec gx(w.cols, 0.0);
            for (std::size_t r = 0; r < w.rows; ++r)
                for (std::size_t c = 0; c < w.cols; ++c) gx[c] += w.at(r, c) * g[r];
            g = std::move(gx);
        }
        return g;
    }

    // Clamp to the stored input range, then shift/scale. Only meaningful for
    // networks whose NNet file carried real normalization data.
    Vec normalize_input(const Vec& x) const {
        check_input(x);
        Vec y = x;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (i < norm_.input_min.size()) y[i] = std::max(y[i], norm_.input_min[i]);
            if (i < norm_.input_max.size()) y[i] = std::min(y[i], norm_.input_max[i]);
            double mean = i < norm_.mean.size() ? norm_.mean[i] : 0.0;
            double range = i < norm_.range.size() ? norm_.range[i] : 1.0;
            if (range == 0.0) range = 1.0;
            y[i] = (y[i] - mean) / range;
        }
        return y;
    }

private:
    void validate() const {
        if (layers_.empty()) throw std::invalid_argument("network has no layers");
        std::size_t prev = layers_.front().weights.cols;
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            const auto& lp = layers_[k];
            if (lp.weights.cols != prev)
                throw std::invalid_argument("layer " + std::to_string(k) + " input width mismatch");
            if (lp.bias.size() != lp.weights.rows)
                throw std::invalid_argument("layer " + std::to_string(k) + " bias length mismatch");
            if (!lp.weights.all_finite() || !all_finite(lp.bias))
                throw std::invalid_argument("layer " + std::to_string(k) + " has non-finite entries");
            bool expect_relu = k + 1 < layers_.size();
            if (lp.has_relu != expect_relu)
                throw std::invalid_argument("layer " + std::to_string(k) +
                                            (expect_relu ? " must apply ReLU" : " must be affine output"));
            prev = lp.weights.rows;
        }
    }

    void check_input(const Vec& x) const {
        if (x.size() != input_dim_) throw std::invalid_argument("input dimension mismatch");
    }

    std::vector<LayerParams> layers_;
    Normalization norm_;
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    std::size_t hidden_count_ = 0;
    std::vector<std::size_t> hidden_offsets_;
};

namespace detail {

class NnetReader {
public:
    explicit NnetReader(std::istream& in) : in_(in) {}

    // Next non-comment, non-blank line split on commas.
    std::vector<double> next_row(const char* what) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            std::size_t start = line.find_first_not_of(" \t\r");
            if (start == std::string::npos) continue;
            if (line.compare(start, 2, "//") == 0) continue;
            return parse_row(line, what);
        }
        throw NnetParseError(std::string("truncated file, expected ") + what, line_no_ + 1);
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::vector<double> parse_row(const std::string& line, const char* what) {
        std::vector<double> out;
        std::size_t pos = 0;
        while (pos < line.size()) {
            std::size_t comma = line.find(',', pos);
            std::string tok = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            pos = comma == std::string::npos ? line.size() : comma + 1;
            std::size_t a = tok.find_first_not_of(" \t\r");
            if (a == std::string::npos) continue;  // trailing comma
            std::size_t b = tok.find_last_not_of(" \t\r");
            tok = tok.substr(a, b - a + 1);
            try {
                std::size_t used = 0;
                double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                out.push_back(v);
            } catch (const std::exception&) {
                throw NnetParseError("non-numeric token '" + tok + "' in " + what, line_no_);
            }
        }
        if (out.empty()) throw NnetParseError(std::string("empty row for ") + what, line_no_);
        return out;
    }

    std::istream& in_;
    std::size_t line_no_ = 0;
};

}  // namespace detail

// Parse the NNet text format: comment lines prefixed "//"; header counts;
// layer sizes; an unused flag; input mins/maxes/means/ranges; then per layer
// the weight rows followed by the bias entries. Raw weights are kept; the
// normalization block is stored separately and never applied here.
inline Network load_nnet(std::istream& in) {
    detail::NnetReader rd(in);

    auto header = rd.next_row("header counts");
    if (header.size() < 4) throw NnetParseError("header needs numLayers,inputSize,outputSize,maxLayerSize", rd.line_no());
    auto as_count = [&](double v, const char* what) {
        if (v < 0 || v != std::floor(v)) throw NnetParseError(std::string("bad count for ") + what, rd.line_no());
        return static_cast<std::size_t>(v);
    };
    std::size_t num_layers = as_count(header[0], "numLayers");
    std::size_t input_size = as_count(header[1], "inputSize");
    std::size_t output_size = as_count(header[2], "outputSize");
    if (num_layers == 0 || input_size == 0 || output_size == 0)
        throw NnetParseError("header counts must be positive", rd.line_no());

    auto sizes_row = rd.next_row("layer sizes");
    if (sizes_row.size() != num_layers + 1)
        throw NnetParseError("dimension mismatch: expected " + std::to_string(num_layers + 1) + " layer sizes, got " +
                                 std::to_string(sizes_row.size()),
                             rd.line_no());
    std::vector<std::size_t> sizes;
    for (double v : sizes_row) sizes.push_back(as_count(v, "layer size"));
    if (sizes.front() != input_size)
        throw NnetParseError("dimension mismatch: first layer size differs from inputSize", rd.line_no());
    if (sizes.back() != output_size)
        throw NnetParseError("dimension mismatch: last layer size differs from outputSize", rd.line_no());

    rd.next_row("unused flag line");

    Normalization norm;
    auto read_norm = [&](const char* what, std::size_t min_len) {
        auto row = rd.next_row(what);
        if (row.size() < min_len)
            throw NnetParseError(std::string("dimension mismatch in ") + what, rd.line_no());
        return Vec(row.begin(), row.end());
    };
    norm.input_min = read_norm("input minimums", input_size);
    norm.input_max = read_norm("input maximums", input_size);
    norm.mean = read_norm("normalization means", input_size);
    norm.range = read_norm("normalization ranges", input_size);

    std::vector<LayerParams> layers;
    for (std::size_t k = 0; k < num_layers; ++k) {
        std::size_t in_w = sizes[k], out_w = sizes[k + 1];
        LayerParams lp;
        lp.weights = Matrix(out_w, in_w);
        for (std::size_t r = 0; r < out_w; ++r) {
            auto row = rd.next_row("weight row");
            if (row.size() != in_w)
                throw NnetParseError("dimension mismatch: weight row has " + std::to_string(row.size()) +
                                         " entries, expected " + std::to_string(in_w),
                                     rd.line_no());
            for (std::size_t c = 0; c < in_w; ++c) lp.weights.at(r, c) = row[c];
        }
        lp.bias.reserve(out_w);
        // Biases appear one value per line in published files; accept any
        // line grouping as long as the totals agree.
        while (lp.bias.size() < out_w) {
            auto row = rd.next_row("bias row");
            if (lp.bias.size() + row.size() > out_w)
                throw NnetParseError("dimension mismatch: too many bias entries for layer " + std::to_string(k),
                                     rd.line_no());
            lp.bias.insert(lp.bias.end(), row.begin(), row.end());
        }
        lp.has_relu = k + 1 < num_layers;
        layers.push_back(std::move(lp));
    }

    try {
        return Network(std::move(layers), std::move(norm));
    } catch (const std::invalid_argument& e) {
        throw NnetParseError(e.what(), rd.line_no());
    }
}

inline Network load_nnet(const std::string& text) {
    std::istringstream in(text);
    return load_nnet(in);
}

// Emit NNet text that load_nnet round-trips exactly.
inline void serialize_nnet(const Network& net, std::ostream& out) {
    auto num = [](double v) {
        std::ostringstream ss;
        ss.precision(17);
        ss << v;
        return ss.str();
    };
    std::size_t max_width = net.input_dim();
    for (std::size_t k = 0; k < net.layer_count(); ++k)
        max_width = std::max(max_width, net.layer(k).weights.rows);
    out << "// Neural network in NNet text format\n";
    out << net.layer_count() << "," << net.input_dim() << "," << net.output_dim() << "," << max_width << ",\n";
    out << net.input_dim() << ",";
    for (std::size_t k = 0; k < net.layer_count(); ++k) out << net.layer(k).weights.rows << ",";
    out << "\n0,\n";
    const Normalization& nm = net.normalization();
    auto write_norm = [&](const Vec& v, double fallback) {
        if (v.empty()) {
            for (std::size_t i = 0; i < net.input_dim(); ++i) out << num(fallback) << ",";
        } else {
            for (double x : v) out << num(x) << ",";
        }
        out << "\n";
    };
    write_norm(nm.input_min, -1e9);
    write_norm(nm.input_max, 1e9);
    write_norm(nm.mean, 0.0);
    write_norm(nm.range, 1.0);
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const LayerParams& lp = net.layer(k);
        for (std::size_t r = 0; r < lp.weights.rows; ++r) {
            for (std::size_t c = 0; c < lp.weights.cols; ++c) out << num(lp.weights.at(r, c)) << ",";
            out << "\n";
        }
        for (double b : lp.bias) out << num(b) << ",\n";
    }
}

inline std::string serialize_nnet(const Network& net) {
    std::ostringstream out;
    serialize_nnet(net, out);
    return out.str();
}

}  // namespace relucheck

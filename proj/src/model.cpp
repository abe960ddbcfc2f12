#include "patchforge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "patchforge/parallel.hpp"
#include "patchforge/raster.hpp"
#include "patchforge/rng.hpp"

namespace pf::model {

namespace {

Layer make_conv(int in_c, int out_c, int k, Rng& rng) {
    Layer l;
    l.kind = LayerKind::Conv;
    l.conv.in_c = in_c;
    l.conv.out_c = out_c;
    l.conv.k = k;
    l.conv.weights.resize(static_cast<size_t>(out_c) * k * k * in_c);
    l.conv.bias.assign(static_cast<size_t>(out_c), 0.0);
    const double std = std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
    for (auto& w : l.conv.weights) w = rng.normal() * std;
    return l;
}

Layer make_dense(int in_n, int out_n, Rng& rng) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.dense.in_n = in_n;
    l.dense.out_n = out_n;
    l.dense.weights.resize(static_cast<size_t>(out_n) * in_n);
    l.dense.bias.assign(static_cast<size_t>(out_n), 0.0);
    const double std = std::sqrt(2.0 / in_n);
    for (auto& w : l.dense.weights) w = rng.normal() * std;
    return l;
}

Layer make_plain(LayerKind kind) {
    Layer l;
    l.kind = kind;
    return l;
}

void conv_forward(const ConvLayer& c, const Tensor& in, Tensor& out) {
    const int k = c.k, pad = c.k / 2, H = in.h, W = in.w, C = c.in_c;
    out = Tensor(H, W, c.out_c);
    for (int oc = 0; oc < c.out_c; ++oc) {
        const double* wbase = &c.weights[static_cast<size_t>(oc) * k * k * C];
        const double b = c.bias[oc];
        for (int y = 0; y < H; ++y) {
            const int ky_lo = std::max(0, pad - y);
            const int ky_hi = std::min(k, H + pad - y);
            for (int x = 0; x < W; ++x) {
                const int kx_lo = std::max(0, pad - x);
                const int kx_hi = std::min(k, W + pad - x);
                double acc = b;
                for (int ky = ky_lo; ky < ky_hi; ++ky) {
                    const int iy = y + ky - pad;
                    for (int kx = kx_lo; kx < kx_hi; ++kx) {
                        const int ix = x + kx - pad;
                        const double* ip = &in.v[(static_cast<size_t>(iy) * W + ix) * C];
                        const double* wp = &wbase[(static_cast<size_t>(ky) * k + kx) * C];
                        for (int ic = 0; ic < C; ++ic) acc += ip[ic] * wp[ic];
                    }
                }
                out.at(y, x, oc) = acc;
            }
        }
    }
}

void conv_backward(const ConvLayer& c, const Tensor& in, const Tensor& dout, Tensor& din,
                   ConvLayer* grads) {
    const int k = c.k, pad = c.k / 2, H = in.h, W = in.w, C = c.in_c;
    din = Tensor(H, W, C);
    for (int y = 0; y < H; ++y) {
        const int ky_lo = std::max(0, pad - y);
        const int ky_hi = std::min(k, H + pad - y);
        for (int x = 0; x < W; ++x) {
            const int kx_lo = std::max(0, pad - x);
            const int kx_hi = std::min(k, W + pad - x);
            for (int oc = 0; oc < c.out_c; ++oc) {
                const double g = dout.at(y, x, oc);
                if (g == 0.0) continue;
                const double* wbase = &c.weights[static_cast<size_t>(oc) * k * k * C];
                double* gbase =
                    grads ? &grads->weights[static_cast<size_t>(oc) * k * k * C] : nullptr;
                for (int ky = ky_lo; ky < ky_hi; ++ky) {
                    const int iy = y + ky - pad;
                    for (int kx = kx_lo; kx < kx_hi; ++kx) {
                        const int ix = x + kx - pad;
                        const size_t in_off = (static_cast<size_t>(iy) * W + ix) * C;
                        const size_t w_off = (static_cast<size_t>(ky) * k + kx) * C;
                        double* dp = &din.v[in_off];
                        const double* ip = &in.v[in_off];
                        const double* wp = &wbase[w_off];
                        if (gbase) {
                            double* gp = &gbase[w_off];
                            for (int ic = 0; ic < C; ++ic) {
                                dp[ic] += g * wp[ic];
                                gp[ic] += g * ip[ic];
                            }
                        } else {
                            for (int ic = 0; ic < C; ++ic) dp[ic] += g * wp[ic];
                        }
                    }
                }
                if (grads) grads->bias[oc] += g;
            }
        }
    }
}

void pool_forward(const Tensor& in, Tensor& out) {
    if (in.h % 2 != 0 || in.w % 2 != 0) {
        throw ContractViolationError("maxpool2 requires even spatial dims");
    }
    out = Tensor(in.h / 2, in.w / 2, in.c);
    for (int y = 0; y < out.h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            for (int ch = 0; ch < in.c; ++ch) {
                double best = in.at(2 * y, 2 * x, ch);
                best = std::max(best, in.at(2 * y, 2 * x + 1, ch));
                best = std::max(best, in.at(2 * y + 1, 2 * x, ch));
                best = std::max(best, in.at(2 * y + 1, 2 * x + 1, ch));
                out.at(y, x, ch) = best;
            }
        }
    }
}

void pool_backward(const Tensor& in, const Tensor& dout, Tensor& din) {
    din = Tensor(in.h, in.w, in.c);
    for (int y = 0; y < dout.h; ++y) {
        for (int x = 0; x < dout.w; ++x) {
            for (int ch = 0; ch < in.c; ++ch) {
                // first maximum in scan order receives the gradient
                int by = 2 * y, bx = 2 * x;
                double best = in.at(by, bx, ch);
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const double v = in.at(2 * y + dy, 2 * x + dx, ch);
                        if (v > best) {
                            best = v;
                            by = 2 * y + dy;
                            bx = 2 * x + dx;
                        }
                    }
                }
                din.at(by, bx, ch) += dout.at(y, x, ch);
            }
        }
    }
}

}  // namespace

Model make_default_model(int input_size, const std::vector<std::string>& class_names,
                         uint64_t seed) {
    if (input_size % 8 != 0) throw InvalidParameterError("input size must be divisible by 8");
    Model m;
    m.input_h = m.input_w = input_size;
    m.input_c = 3;
    m.class_names = class_names;
    m.layers.push_back(make_plain(LayerKind::Center));
    const int channels[3] = {8, 16, 32};
    int in_c = 3;
    int layer_idx = 0;
    for (int block = 0; block < 3; ++block) {
        Rng rng(derive_seed(seed, "layer", static_cast<uint64_t>(layer_idx++)));
        m.layers.push_back(make_conv(in_c, channels[block], 3, rng));
        m.layers.push_back(make_plain(LayerKind::Relu));
        m.layers.push_back(make_plain(LayerKind::MaxPool2));
        in_c = channels[block];
    }
    m.layers.push_back(make_plain(LayerKind::Flatten));
    const int flat = (input_size / 8) * (input_size / 8) * in_c;
    Rng rng(derive_seed(seed, "layer", static_cast<uint64_t>(layer_idx)));
    m.layers.push_back(make_dense(flat, static_cast<int>(class_names.size()), rng));
    return m;
}

Model make_dense_softmax_model(int h, int w, int c, const std::vector<std::string>& class_names,
                               uint64_t seed) {
    Model m;
    m.input_h = h;
    m.input_w = w;
    m.input_c = c;
    m.class_names = class_names;
    m.layers.push_back(make_plain(LayerKind::Flatten));
    Rng rng(derive_seed(seed, "layer", 0));
    m.layers.push_back(make_dense(h * w * c, static_cast<int>(class_names.size()), rng));
    return m;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> probs(logits.size());
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (auto& p : probs) p /= sum;
    return probs;
}

ForwardTrace forward_trace(const Model& m, const Tensor& image) {
    if (image.h != m.input_h || image.w != m.input_w || image.c != m.input_c) {
        throw ContractViolationError("model input shape mismatch");
    }
    ForwardTrace t;
    t.activations.reserve(m.layers.size() + 1);
    t.activations.push_back(image);
    for (const auto& layer : m.layers) {
        const Tensor& in = t.activations.back();
        Tensor out;
        switch (layer.kind) {
            case LayerKind::Conv:
                conv_forward(layer.conv, in, out);
                break;
            case LayerKind::Relu:
                out = in;
                for (auto& v : out.v) v = v > 0.0 ? v : 0.0;
                break;
            case LayerKind::MaxPool2:
                pool_forward(in, out);
                break;
            case LayerKind::Flatten:
                out = Tensor(1, 1, static_cast<int>(in.size()));
                out.v = in.v;
                break;
            case LayerKind::Center:
                out = in;
                for (auto& v : out.v) v -= 0.5;
                break;
            case LayerKind::Dense: {
                const auto& d = layer.dense;
                if (static_cast<int>(in.size()) != d.in_n) {
                    throw ContractViolationError("dense layer input size mismatch");
                }
                out = Tensor(1, 1, d.out_n);
                for (int o = 0; o < d.out_n; ++o) {
                    double acc = d.bias[o];
                    const double* wp = &d.weights[static_cast<size_t>(o) * d.in_n];
                    for (int i = 0; i < d.in_n; ++i) acc += wp[i] * in.v[i];
                    out.v[o] = acc;
                }
                break;
            }
        }
        t.activations.push_back(std::move(out));
    }
    t.logits = t.activations.back().v;
    t.probs = softmax(t.logits);
    return t;
}

std::vector<double> forward(const Model& m, const Tensor& image) {
    return forward_trace(m, image).probs;
}

double cross_entropy(const std::vector<double>& probs, int label) {
    if (label < 0 || label >= static_cast<int>(probs.size())) {
        throw ContractViolationError("cross_entropy label out of range");
    }
    return -std::log(std::max(probs[static_cast<size_t>(label)], 1e-12));
}

ModelGrads zero_grads(const Model& m) {
    ModelGrads g;
    g.layers = m.layers;
    for (auto& l : g.layers) {
        std::fill(l.conv.weights.begin(), l.conv.weights.end(), 0.0);
        std::fill(l.conv.bias.begin(), l.conv.bias.end(), 0.0);
        std::fill(l.dense.weights.begin(), l.dense.weights.end(), 0.0);
        std::fill(l.dense.bias.begin(), l.dense.bias.end(), 0.0);
    }
    return g;
}

void ModelGrads::add_scaled(const ModelGrads& other, double scale) {
    for (size_t li = 0; li < layers.size(); ++li) {
        auto& a = layers[li];
        const auto& b = other.layers[li];
        for (size_t i = 0; i < a.conv.weights.size(); ++i) a.conv.weights[i] += scale * b.conv.weights[i];
        for (size_t i = 0; i < a.conv.bias.size(); ++i) a.conv.bias[i] += scale * b.conv.bias[i];
        for (size_t i = 0; i < a.dense.weights.size(); ++i) a.dense.weights[i] += scale * b.dense.weights[i];
        for (size_t i = 0; i < a.dense.bias.size(); ++i) a.dense.bias[i] += scale * b.dense.bias[i];
    }
}

Tensor backward(const Model& m, const ForwardTrace& trace, const std::vector<double>& dlogits,
                ModelGrads* param_grads) {
    if (dlogits.size() != trace.probs.size()) {
        throw ContractViolationError("dlogits size mismatch");
    }
    Tensor grad(1, 1, static_cast<int>(dlogits.size()));
    grad.v = dlogits;
    for (int li = static_cast<int>(m.layers.size()) - 1; li >= 0; --li) {
        const Layer& layer = m.layers[li];
        const Tensor& in = trace.activations[static_cast<size_t>(li)];
        Tensor din;
        switch (layer.kind) {
            case LayerKind::Conv:
                conv_backward(layer.conv, in, grad, din,
                              param_grads ? &param_grads->layers[static_cast<size_t>(li)].conv
                                          : nullptr);
                break;
            case LayerKind::Relu:
                din = grad;
                for (size_t i = 0; i < in.size(); ++i) {
                    if (!(in.v[i] > 0.0)) din.v[i] = 0.0;
                }
                break;
            case LayerKind::MaxPool2:
                pool_backward(in, grad, din);
                break;
            case LayerKind::Flatten:
                din = in;
                din.v = grad.v;
                break;
            case LayerKind::Center:
                din = std::move(grad);
                break;
            case LayerKind::Dense: {
                const auto& d = layer.dense;
                din = Tensor(1, 1, d.in_n);
                DenseLayer* g =
                    param_grads ? &param_grads->layers[static_cast<size_t>(li)].dense : nullptr;
                for (int o = 0; o < d.out_n; ++o) {
                    const double go = grad.v[static_cast<size_t>(o)];
                    const double* wp = &d.weights[static_cast<size_t>(o) * d.in_n];
                    double* gw = g ? &g->weights[static_cast<size_t>(o) * d.in_n] : nullptr;
                    for (int i = 0; i < d.in_n; ++i) {
                        din.v[static_cast<size_t>(i)] += go * wp[i];
                        if (gw) gw[i] += go * in.v[static_cast<size_t>(i)];
                    }
                    if (g) g->bias[static_cast<size_t>(o)] += go;
                }
                break;
            }
        }
        grad = std::move(din);
    }
    return grad;
}

Tensor backward_input(const Model& m, const Tensor& image, const std::vector<double>& dlogits) {
    const ForwardTrace t = forward_trace(m, image);
    return backward(m, t, dlogits, nullptr);
}

Tensor backward_input(const Model& m, const Tensor& image, int label) {
    const ForwardTrace t = forward_trace(m, image);
    std::vector<double> dlogits = t.probs;
    dlogits[static_cast<size_t>(label)] -= 1.0;
    return backward(m, t, dlogits, nullptr);
}

LabeledDataset generate_dataset(const scene::Scene& sc, const std::string& central_tag,
                                const std::vector<ClassObjectSpec>& classes, int n_per_class,
                                const std::vector<scene::TransformDistribution>& jitter,
                                uint64_t seed, double val_fraction, int threads) {
    if (classes.size() < 3) throw InvalidParameterError("need at least 3 classes");
    if (n_per_class < 50) throw InvalidParameterError("need at least 50 images per class");

    const size_t central = sc.object_index_by_tag(central_tag);
    const Mat4 anchor = sc.objects[central].transform;

    LabeledDataset ds;
    for (const auto& c : classes) ds.class_names.push_back(c.name);
    const size_t total = classes.size() * static_cast<size_t>(n_per_class);
    ds.images.resize(total);
    ds.labels.resize(total);
    ds.is_val.resize(total);

    const int n_train = static_cast<int>(std::lround(n_per_class * (1.0 - val_fraction)));
    parallel_for(total, threads, [&](size_t i) {
        const int cls = static_cast<int>(i / static_cast<size_t>(n_per_class));
        const int j = static_cast<int>(i % static_cast<size_t>(n_per_class));

        scene::Scene variant = sc;
        auto& obj = variant.objects[central];
        obj.mesh = classes[static_cast<size_t>(cls)].mesh;
        obj.albedo = classes[static_cast<size_t>(cls)].albedo;
        obj.transform = anchor * classes[static_cast<size_t>(cls)].transform;
        obj.class_tag = classes[static_cast<size_t>(cls)].name;
        obj.smooth_shading = classes[static_cast<size_t>(cls)].smooth_shading;

        Rng rng(derive_seed(seed, "dataset-image", i));
        scene::TransformSample sample;
        sample.provenance = scene::Provenance::Random;
        for (const auto& d : jitter) sample.values.emplace_back(d.id, rng.uniform(d.lo, d.hi));

        // background only: dataset images never contain the patch
        ds.images[i] = raster::render_buffers(variant, sample).background;
        ds.labels[i] = cls;
        ds.is_val[i] = j >= n_train ? 1 : 0;
    });
    return ds;
}

double accuracy(const Model& m, const LabeledDataset& ds, bool val_split, int threads) {
    std::vector<uint8_t> hit(ds.size(), 0);
    std::vector<uint8_t> counted(ds.size(), 0);
    parallel_for(ds.size(), threads, [&](size_t i) {
        if ((ds.is_val[i] != 0) != val_split) return;
        counted[i] = 1;
        const auto probs = forward(m, ds.images[i]);
        const int pred = static_cast<int>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
        hit[i] = pred == ds.labels[i] ? 1 : 0;
    });
    long n = 0, correct = 0;
    for (size_t i = 0; i < ds.size(); ++i) {
        if (counted[i]) {
            ++n;
            correct += hit[i];
        }
    }
    return n > 0 ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
}

TrainReport train(Model& m, const LabeledDataset& ds, const TrainHyper& hyper) {
    if (ds.size() == 0) throw InvalidParameterError("dataset is empty");

    std::vector<size_t> train_idx;
    for (size_t i = 0; i < ds.size(); ++i) {
        if (!ds.is_val[i]) train_idx.push_back(i);
    }
    if (train_idx.empty()) throw InvalidParameterError("dataset has no training split");

    ModelGrads velocity = zero_grads(m);
    Rng shuffle_rng(derive_seed(hyper.seed, "train-shuffle"));
    double lr = hyper.lr;
    double last_loss = 0.0;

    TrainReport report;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        if (std::find(hyper.lr_decay_epochs.begin(), hyper.lr_decay_epochs.end(), epoch) !=
            hyper.lr_decay_epochs.end()) {
            lr *= hyper.lr_decay;
        }
        shuffle_rng.shuffle(train_idx);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < train_idx.size(); start += hyper.batch_size) {
            const size_t bn = std::min(static_cast<size_t>(hyper.batch_size),
                                       train_idx.size() - start);
            std::vector<ModelGrads> grads(bn);
            std::vector<double> losses(bn, 0.0);
            parallel_for(bn, hyper.threads, [&](size_t b) {
                const size_t i = train_idx[start + b];
                const ForwardTrace t = forward_trace(m, ds.images[i]);
                losses[b] = cross_entropy(t.probs, ds.labels[i]);
                std::vector<double> dlogits = t.probs;
                dlogits[static_cast<size_t>(ds.labels[i])] -= 1.0;
                grads[b] = zero_grads(m);
                backward(m, t, dlogits, &grads[b]);
            });
            ModelGrads batch_grad = zero_grads(m);
            for (size_t b = 0; b < bn; ++b) {
                batch_grad.add_scaled(grads[b], 1.0 / static_cast<double>(bn));
                epoch_loss += losses[b];
            }
            // SGD with momentum
            for (size_t li = 0; li < m.layers.size(); ++li) {
                auto step = [&](std::vector<double>& w, std::vector<double>& v,
                                const std::vector<double>& g) {
                    for (size_t i = 0; i < w.size(); ++i) {
                        v[i] = hyper.momentum * v[i] - lr * g[i];
                        w[i] += v[i];
                        if (!std::isfinite(w[i])) {
                            throw TrainingFailureError("training diverged (non-finite weight)");
                        }
                    }
                };
                step(m.layers[li].conv.weights, velocity.layers[li].conv.weights,
                     batch_grad.layers[li].conv.weights);
                step(m.layers[li].conv.bias, velocity.layers[li].conv.bias,
                     batch_grad.layers[li].conv.bias);
                step(m.layers[li].dense.weights, velocity.layers[li].dense.weights,
                     batch_grad.layers[li].dense.weights);
                step(m.layers[li].dense.bias, velocity.layers[li].dense.bias,
                     batch_grad.layers[li].dense.bias);
            }
        }
        last_loss = epoch_loss / static_cast<double>(train_idx.size());
        if (!std::isfinite(last_loss)) {
            throw TrainingFailureError("training diverged (non-finite loss)");
        }
        report.epochs_run = epoch + 1;
    }

    report.final_loss = last_loss;
    report.train_accuracy = accuracy(m, ds, false, hyper.threads);
    report.val_accuracy = accuracy(m, ds, true, hyper.threads);
    return report;
}

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw CorruptInputError("truncated checkpoint");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
    static_assert(sizeof(double) == 8);
    put_u32(out, static_cast<uint32_t>(v.size()));
    for (double d : v) {
        uint64_t bits;
        std::memcpy(&bits, &d, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(b), 8);
    }
}

std::vector<double> get_doubles(std::istream& in) {
    const uint32_t n = get_u32(in);
    std::vector<double> v(n);
    for (uint32_t i = 0; i < n; ++i) {
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        if (!in) throw CorruptInputError("truncated checkpoint");
        uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<uint64_t>(b[k]) << (8 * k);
        std::memcpy(&v[i], &bits, 8);
    }
    return v;
}

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(m.input_h));
    put_u32(out, static_cast<uint32_t>(m.input_w));
    put_u32(out, static_cast<uint32_t>(m.input_c));
    put_u32(out, static_cast<uint32_t>(m.class_names.size()));
    for (const auto& name : m.class_names) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    put_u32(out, static_cast<uint32_t>(m.layers.size()));
    for (const auto& l : m.layers) {
        put_u32(out, static_cast<uint32_t>(l.kind));
        if (l.kind == LayerKind::Conv) {
            put_u32(out, static_cast<uint32_t>(l.conv.in_c));
            put_u32(out, static_cast<uint32_t>(l.conv.out_c));
            put_u32(out, static_cast<uint32_t>(l.conv.k));
            put_doubles(out, l.conv.weights);
            put_doubles(out, l.conv.bias);
        } else if (l.kind == LayerKind::Dense) {
            put_u32(out, static_cast<uint32_t>(l.dense.in_n));
            put_u32(out, static_cast<uint32_t>(l.dense.out_n));
            put_doubles(out, l.dense.weights);
            put_doubles(out, l.dense.bias);
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("checkpoint not found: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw CorruptInputError("bad checkpoint magic: " + path);
    }
    if (get_u32(in) != kVersion) throw CorruptInputError("unsupported checkpoint version");
    Model m;
    m.input_h = static_cast<int>(get_u32(in));
    m.input_w = static_cast<int>(get_u32(in));
    m.input_c = static_cast<int>(get_u32(in));
    const uint32_t n_classes = get_u32(in);
    for (uint32_t i = 0; i < n_classes; ++i) {
        const uint32_t len = get_u32(in);
        if (len > 4096) throw CorruptInputError("implausible class name length");
        std::string name(len, '\0');
        in.read(name.data(), len);
        if (!in) throw CorruptInputError("truncated checkpoint");
        m.class_names.push_back(std::move(name));
    }
    const uint32_t n_layers = get_u32(in);
    for (uint32_t i = 0; i < n_layers; ++i) {
        Layer l;
        const uint32_t kind = get_u32(in);
        if (kind < 1 || kind > 6) throw CorruptInputError("unknown layer kind in checkpoint");
        l.kind = static_cast<LayerKind>(kind);
        if (l.kind == LayerKind::Conv) {
            l.conv.in_c = static_cast<int>(get_u32(in));
            l.conv.out_c = static_cast<int>(get_u32(in));
            l.conv.k = static_cast<int>(get_u32(in));
            l.conv.weights = get_doubles(in);
            l.conv.bias = get_doubles(in);
            if (l.conv.weights.size() !=
                static_cast<size_t>(l.conv.out_c) * l.conv.k * l.conv.k * l.conv.in_c) {
                throw CorruptInputError("conv weight table size mismatch");
            }
        } else if (l.kind == LayerKind::Dense) {
            l.dense.in_n = static_cast<int>(get_u32(in));
            l.dense.out_n = static_cast<int>(get_u32(in));
            l.dense.weights = get_doubles(in);
            l.dense.bias = get_doubles(in);
            if (l.dense.weights.size() !=
                static_cast<size_t>(l.dense.out_n) * l.dense.in_n) {
                throw CorruptInputError("dense weight table size mismatch");
            }
        }
        m.layers.push_back(std::move(l));
    }
    return m;
}

}  // namespace pf::model

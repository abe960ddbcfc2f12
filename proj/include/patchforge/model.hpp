#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patchforge/math.hpp"
#include "patchforge/scene.hpp"

namespace pf::model {

using Tensor = Array3;

struct ConvLayer {
    int in_c = 0, out_c = 0, k = 3;              // stride 1, "same" zero padding
    std::vector<double> weights;                 // (out_c, ky, kx, in_c)
    std::vector<double> bias;                    // (out_c)
};

struct DenseLayer {
    int in_n = 0, out_n = 0;
    std::vector<double> weights;                 // (out, in), row-major
    std::vector<double> bias;                    // (out)
};

enum class LayerKind : uint32_t { Conv = 1, Relu = 2, MaxPool2 = 3, Flatten = 4, Dense = 5, Center = 6 };

struct Layer {
    LayerKind kind = LayerKind::Relu;
    ConvLayer conv;
    DenseLayer dense;
};

// Feed-forward classifier: a layer stack ending in a dense layer whose
// logits go through softmax. All math in double precision.
struct Model {
    int input_h = 0, input_w = 0, input_c = 3;
    std::vector<Layer> layers;
    std::vector<std::string> class_names;

    int num_classes() const { return static_cast<int>(class_names.size()); }
};

// 3 blocks of (conv3x3, relu, maxpool2) with 8/16/32 channels, then dense.
Model make_default_model(int input_size, const std::vector<std::string>& class_names,
                         uint64_t seed);

// Flatten + dense + softmax; used by small gradient-check configurations.
Model make_dense_softmax_model(int h, int w, int c, const std::vector<std::string>& class_names,
                               uint64_t seed);

struct ForwardTrace {
    std::vector<Tensor> activations;  // activations[0] = input, one entry per layer after
    std::vector<double> logits;
    std::vector<double> probs;
};

std::vector<double> softmax(const std::vector<double>& logits);

ForwardTrace forward_trace(const Model& m, const Tensor& image);

// Softmax probabilities for one image; deterministic and side-effect free.
std::vector<double> forward(const Model& m, const Tensor& image);

// -log(probs[label]) with the probability floored at 1e-12.
double cross_entropy(const std::vector<double>& probs, int label);

struct ModelGrads {
    std::vector<Layer> layers;  // same structure, weight arrays hold gradients

    void add_scaled(const ModelGrads& other, double scale);
};

ModelGrads zero_grads(const Model& m);

// Backpropagates dL/dlogits through the stack. Returns dL/dinput; fills
// param_grads when non-null.
Tensor backward(const Model& m, const ForwardTrace& trace, const std::vector<double>& dlogits,
                ModelGrads* param_grads);

Tensor backward_input(const Model& m, const Tensor& image, const std::vector<double>& dlogits);
// Convenience for a cross-entropy loss toward `label` (dlogits = probs - onehot).
Tensor backward_input(const Model& m, const Tensor& image, int label);

// ---- dataset generation --------------------------------------------------

struct ClassObjectSpec {
    std::string name;           // class label
    TriangleMesh mesh;          // object-local
    Rgb albedo;
    Mat4 transform;             // relative to the central object's anchor
    bool smooth_shading = true;
};

struct LabeledDataset {
    std::vector<Tensor> images;  // [0,1], H x W x 3
    std::vector<int> labels;
    std::vector<uint8_t> is_val;
    std::vector<std::string> class_names;

    size_t size() const { return images.size(); }
};

// Renders n_per_class images per class by swapping the scene's central
// object (the one tagged `central_tag`) for each class object and jittering
// the listed transform dimensions. Images never contain the patch strip.
LabeledDataset generate_dataset(const scene::Scene& sc, const std::string& central_tag,
                                const std::vector<ClassObjectSpec>& classes, int n_per_class,
                                const std::vector<scene::TransformDistribution>& jitter,
                                uint64_t seed, double val_fraction = 0.2, int threads = 1);

// ---- training ------------------------------------------------------------

struct TrainHyper {
    int epochs = 30;
    double lr = 0.02;
    double momentum = 0.9;
    int batch_size = 16;
    uint64_t seed = 0;
    std::vector<int> lr_decay_epochs;
    double lr_decay = 0.5;
    int threads = 1;
};

struct TrainReport {
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double final_loss = 0.0;
    int epochs_run = 0;
};

// SGD with momentum; deterministic given the seed and thread count.
TrainReport train(Model& m, const LabeledDataset& ds, const TrainHyper& hyper);

double accuracy(const Model& m, const LabeledDataset& ds, bool val_split, int threads = 1);

// ---- checkpoint ----------------------------------------------------------

// Little-endian binary: magic "PFCK", version, input dims, class names,
// layer table, then row-major weight arrays per layer.
void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace pf::model

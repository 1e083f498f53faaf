// Copyright 2026 The ckd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CKD_CLASSIFIER_H_
#define CKD_CLASSIFIER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ckd/transport.h"

namespace ckd {

// Describes the embedding network phi and the linear head W of a classifier
// f(x) = W^T phi(x) (+ b).
struct Architecture {
  enum class Embedding {
    kIdentity,  // phi(x) = x
    kLinear,    // phi(x) = A x + c
    kMlp,       // phi(x) = act(A x + c)
  };
  enum class Activation { kTanh, kRelu };

  Embedding embedding = Embedding::kIdentity;
  Activation activation = Activation::kTanh;
  int input_dim = 0;
  int feature_dim = 0;
  bool head_bias = false;

  // "linear", "proj<d>", "mlp<h>", "mlp<h>-relu"; "+bias" suffix when the head
  // carries a bias.
  std::string Name() const;
  static Architecture Parse(std::string_view name, int input_dim);

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

std::string_view ActivationName(Architecture::Activation activation);

struct LabeledDataset {
  Matrix instances;         // N x D
  std::vector<int> labels;  // indices into label_set
  LabelSet label_set;       // global label ids

  Index size() const { return instances.rows(); }
  Index dim() const { return instances.cols(); }
  Index num_classes() const { return static_cast<Index>(label_set.size()); }
  std::vector<Index> ClassCounts() const;
  // Throws kInvalidInput on out-of-range labels or size mismatches.
  void Validate() const;
  // Rows selected by index, keeping the label set.
  LabeledDataset Subset(const std::vector<Index>& rows) const;
};

enum class CenterProvenance { kEmpiricalMean, kNormalizedHeadWeights };

std::string_view CenterProvenanceName(CenterProvenance provenance);
CenterProvenance ParseCenterProvenance(std::string_view name);

struct ClassCenters {
  Matrix centers;  // C x d, one row per class
  LabelSet label_set;
  CenterProvenance provenance = CenterProvenance::kEmpiricalMean;
};

class Classifier {
 public:
  // Fresh parameters drawn from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Classifier Create(const Architecture& architecture, LabelSet label_set,
                           std::uint64_t seed);

  // Validates every dimension before taking ownership.
  Classifier(Architecture architecture, LabelSet label_set,
             Matrix embedding_weight, Vector embedding_bias, Matrix head,
             Vector head_bias);

  const Architecture& architecture() const { return architecture_; }
  const LabelSet& label_set() const { return label_set_; }
  Index num_classes() const { return static_cast<Index>(label_set_.size()); }
  int input_dim() const { return architecture_.input_dim; }
  int feature_dim() const { return architecture_.feature_dim; }

  const Matrix& embedding_weight() const { return embedding_weight_; }
  const Vector& embedding_bias() const { return embedding_bias_; }
  const Matrix& head() const { return head_; }
  const Vector& head_bias() const { return head_bias_; }
  void set_head(Matrix head);

  // Class centers of the classifier's own training data, if recorded.
  const std::optional<ClassCenters>& stored_centers() const { return stored_centers_; }
  void set_stored_centers(std::optional<ClassCenters> centers);

  Matrix Embed(const Matrix& x) const;  // N x D -> N x d
  Vector Embed(const Vector& x) const;
  Matrix Logits(const Matrix& x) const;  // N x D -> N x C
  Vector Logits(const Vector& x) const;
  Matrix LogitsFromFeatures(const Matrix& features) const;

  // Flat parameters: embedding weight, embedding bias, head, head bias, each
  // column-major.
  Index NumParameters() const;
  Vector Parameters() const;
  void SetParameters(const Vector& parameters);
  // Gradient w.r.t. the flat parameters of sum_i <dlogits_i, logits(x_i)>.
  Vector Backward(const Matrix& x, const Matrix& dlogits) const;

 private:
  Matrix PreActivation(const Matrix& x) const;

  Architecture architecture_;
  LabelSet label_set_;
  Matrix embedding_weight_;  // d x D (empty for identity)
  Vector embedding_bias_;    // d (empty for identity)
  Matrix head_;              // d x C
  Vector head_bias_;         // C (empty without bias)
  std::optional<ClassCenters> stored_centers_;
};

// Row-wise argmax of the logits, as label-set indices.
std::vector<int> PredictIndices(const Classifier& model, const Matrix& x);
double Accuracy(const Classifier& model, const LabeledDataset& data);

}  // namespace ckd

#endif  // CKD_CLASSIFIER_H_

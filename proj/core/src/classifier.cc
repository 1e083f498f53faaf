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

#include "ckd/classifier.h"

#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include "ckd/error.h"

namespace ckd {
namespace {

constexpr std::string_view kBiasSuffix = "+bias";

int ParseWidth(std::string_view digits, std::string_view full) {
  int value = 0;
  const auto* end = digits.data() + digits.size();
  auto [ptr, ec] = std::from_chars(digits.data(), end, value);
  if (ec != std::errc() || ptr != end || value <= 0) {
    Fail(ErrorCode::kInvalidConfiguration,
         "bad architecture name '" + std::string(full) + "'");
  }
  return value;
}

void FillUniform(Eigen::Ref<Matrix> m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
}

}  // namespace

std::string_view ActivationName(Architecture::Activation activation) {
  return activation == Architecture::Activation::kTanh ? "tanh" : "relu";
}

std::string Architecture::Name() const {
  std::string name;
  switch (embedding) {
    case Embedding::kIdentity: name = "linear"; break;
    case Embedding::kLinear: name = "proj" + std::to_string(feature_dim); break;
    case Embedding::kMlp:
      name = "mlp" + std::to_string(feature_dim);
      if (activation == Activation::kRelu) name += "-relu";
      break;
  }
  if (head_bias) name += kBiasSuffix;
  return name;
}

Architecture Architecture::Parse(std::string_view name, int input_dim) {
  if (input_dim <= 0) {
    Fail(ErrorCode::kInvalidConfiguration, "input dimension must be positive");
  }
  const std::string_view full = name;
  Architecture arch;
  arch.input_dim = input_dim;
  if (name.ends_with(kBiasSuffix)) {
    arch.head_bias = true;
    name.remove_suffix(kBiasSuffix.size());
  }
  if (name == "linear") {
    arch.embedding = Embedding::kIdentity;
    arch.feature_dim = input_dim;
  } else if (name.starts_with("proj")) {
    arch.embedding = Embedding::kLinear;
    arch.feature_dim = ParseWidth(name.substr(4), full);
  } else if (name.starts_with("mlp")) {
    arch.embedding = Embedding::kMlp;
    name.remove_prefix(3);
    if (name.ends_with("-relu")) {
      arch.activation = Activation::kRelu;
      name.remove_suffix(5);
    } else if (name.ends_with("-tanh")) {
      name.remove_suffix(5);
    }
    arch.feature_dim = ParseWidth(name, full);
  } else {
    Fail(ErrorCode::kInvalidConfiguration,
         "unknown architecture '" + std::string(full) + "'");
  }
  return arch;
}

std::string_view CenterProvenanceName(CenterProvenance provenance) {
  return provenance == CenterProvenance::kEmpiricalMean ? "empirical-mean"
                                                        : "normalized-head-weights";
}

CenterProvenance ParseCenterProvenance(std::string_view name) {
  if (name == "empirical-mean") return CenterProvenance::kEmpiricalMean;
  if (name == "normalized-head-weights") return CenterProvenance::kNormalizedHeadWeights;
  Fail(ErrorCode::kInvalidConfiguration,
       "unknown center provenance '" + std::string(name) + "'");
}

std::vector<Index> LabeledDataset::ClassCounts() const {
  std::vector<Index> counts(label_set.size(), 0);
  for (int y : labels) {
    if (y >= 0 && static_cast<size_t>(y) < counts.size()) ++counts[static_cast<size_t>(y)];
  }
  return counts;
}

void LabeledDataset::Validate() const {
  if (static_cast<Index>(labels.size()) != instances.rows()) {
    Fail(ErrorCode::kInvalidInput, "label count does not match instance count");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<size_t>(y) >= label_set.size()) {
      Fail(ErrorCode::kInvalidInput, "label index " + std::to_string(y) + " out of range");
    }
  }
  if (!instances.allFinite()) {
    Fail(ErrorCode::kInvalidInput, "dataset has non-finite features");
  }
}

LabeledDataset LabeledDataset::Subset(const std::vector<Index>& rows) const {
  LabeledDataset out;
  out.label_set = label_set;
  out.instances.resize(static_cast<Index>(rows.size()), instances.cols());
  out.labels.resize(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    out.instances.row(static_cast<Index>(r)) = instances.row(rows[r]);
    out.labels[r] = labels[static_cast<size_t>(rows[r])];
  }
  return out;
}

Classifier Classifier::Create(const Architecture& architecture, LabelSet label_set,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index d = architecture.feature_dim;
  const Index in = architecture.input_dim;
  const Index c = static_cast<Index>(label_set.size());
  Matrix embedding_weight;
  Vector embedding_bias;
  if (architecture.embedding != Architecture::Embedding::kIdentity) {
    embedding_weight.resize(d, in);
    embedding_bias.resize(d);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    FillUniform(embedding_weight, bound, rng);
    FillUniform(embedding_bias, bound, rng);
  }
  Matrix head(d, c);
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(d));
  FillUniform(head, head_bound, rng);
  Vector head_bias;
  if (architecture.head_bias) {
    head_bias.resize(c);
    FillUniform(head_bias, head_bound, rng);
  }
  return Classifier(architecture, std::move(label_set), std::move(embedding_weight),
                    std::move(embedding_bias), std::move(head), std::move(head_bias));
}

Classifier::Classifier(Architecture architecture, LabelSet label_set,
                       Matrix embedding_weight, Vector embedding_bias, Matrix head,
                       Vector head_bias)
    : architecture_(architecture),
      label_set_(std::move(label_set)),
      embedding_weight_(std::move(embedding_weight)),
      embedding_bias_(std::move(embedding_bias)),
      head_(std::move(head)),
      head_bias_(std::move(head_bias)) {
  const Index in = architecture_.input_dim;
  const Index d = architecture_.feature_dim;
  const Index c = static_cast<Index>(label_set_.size());
  if (in <= 0 || d <= 0 || c <= 0) {
    Fail(ErrorCode::kInvalidInput, "classifier dimensions must be positive");
  }
  if (architecture_.embedding == Architecture::Embedding::kIdentity) {
    if (d != in || embedding_weight_.size() != 0 || embedding_bias_.size() != 0) {
      Fail(ErrorCode::kInvalidInput, "identity embedding takes no parameters");
    }
  } else if (embedding_weight_.rows() != d || embedding_weight_.cols() != in ||
             embedding_bias_.size() != d) {
    Fail(ErrorCode::kInvalidInput, "embedding parameters do not match architecture");
  }
  if (head_.rows() != d || head_.cols() != c) {
    Fail(ErrorCode::kInvalidInput, "head column count must equal label-set size");
  }
  if (head_bias_.size() != (architecture_.head_bias ? c : 0)) {
    Fail(ErrorCode::kInvalidInput, "head bias does not match architecture");
  }
}

void Classifier::set_head(Matrix head) {
  if (head.rows() != head_.rows() || head.cols() != head_.cols()) {
    Fail(ErrorCode::kInvalidInput, "replacement head has the wrong shape");
  }
  head_ = std::move(head);
}

void Classifier::set_stored_centers(std::optional<ClassCenters> centers) {
  if (centers && (centers->centers.cols() != feature_dim() ||
                  centers->label_set != label_set_)) {
    Fail(ErrorCode::kInvalidInput, "stored centers do not match the classifier");
  }
  stored_centers_ = std::move(centers);
}

Matrix Classifier::PreActivation(const Matrix& x) const {
  return (x * embedding_weight_.transpose()).rowwise() + embedding_bias_.transpose();
}

Matrix Classifier::Embed(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    Fail(ErrorCode::kInvalidInput, "input has " + std::to_string(x.cols()) +
                                       " features, expected " +
                                       std::to_string(input_dim()));
  }
  switch (architecture_.embedding) {
    case Architecture::Embedding::kIdentity: return x;
    case Architecture::Embedding::kLinear: return PreActivation(x);
    case Architecture::Embedding::kMlp: {
      Matrix pre = PreActivation(x);
      if (architecture_.activation == Architecture::Activation::kTanh) {
        return pre.array().tanh().matrix();
      }
      return pre.cwiseMax(0.0);
    }
  }
  return x;
}

Vector Classifier::Embed(const Vector& x) const {
  return Embed(Matrix(x.transpose())).row(0).transpose();
}

Matrix Classifier::LogitsFromFeatures(const Matrix& features) const {
  if (features.cols() != feature_dim()) {
    Fail(ErrorCode::kInvalidInput, "feature dimension mismatch");
  }
  Matrix logits = features * head_;
  if (head_bias_.size() > 0) logits.rowwise() += head_bias_.transpose();
  return logits;
}

Matrix Classifier::Logits(const Matrix& x) const { return LogitsFromFeatures(Embed(x)); }

Vector Classifier::Logits(const Vector& x) const {
  return Logits(Matrix(x.transpose())).row(0).transpose();
}

Index Classifier::NumParameters() const {
  return embedding_weight_.size() + embedding_bias_.size() + head_.size() +
         head_bias_.size();
}

Vector Classifier::Parameters() const {
  Vector p(NumParameters());
  Index offset = 0;
  auto put = [&](const auto& block) {
    p.segment(offset, block.size()) = Eigen::Map<const Vector>(block.data(), block.size());
    offset += block.size();
  };
  put(embedding_weight_);
  put(embedding_bias_);
  put(head_);
  put(head_bias_);
  return p;
}

void Classifier::SetParameters(const Vector& parameters) {
  if (parameters.size() != NumParameters()) {
    Fail(ErrorCode::kInvalidInput, "parameter vector has the wrong length");
  }
  Index offset = 0;
  auto take = [&](auto& block) {
    Eigen::Map<Vector>(block.data(), block.size()) = parameters.segment(offset, block.size());
    offset += block.size();
  };
  take(embedding_weight_);
  take(embedding_bias_);
  take(head_);
  take(head_bias_);
}

Vector Classifier::Backward(const Matrix& x, const Matrix& dlogits) const {
  if (dlogits.rows() != x.rows() || dlogits.cols() != num_classes()) {
    Fail(ErrorCode::kInvalidInput, "logit gradient has the wrong shape");
  }
  const Matrix features = Embed(x);
  Vector grad(NumParameters());
  Index offset = embedding_weight_.size() + embedding_bias_.size();

  const Matrix d_head = features.transpose() * dlogits;
  grad.segment(offset, d_head.size()) = Eigen::Map<const Vector>(d_head.data(), d_head.size());
  offset += d_head.size();
  if (head_bias_.size() > 0) {
    grad.segment(offset, head_bias_.size()) = dlogits.colwise().sum().transpose();
  }

  if (architecture_.embedding == Architecture::Embedding::kIdentity) return grad;

  Matrix d_pre = dlogits * head_.transpose();  // d features
  if (architecture_.embedding == Architecture::Embedding::kMlp) {
    if (architecture_.activation == Architecture::Activation::kTanh) {
      d_pre.array() *= 1.0 - features.array().square();
    } else {
      d_pre.array() *= (features.array() > 0.0).cast<double>();
    }
  }
  const Matrix d_weight = d_pre.transpose() * x;
  grad.head(d_weight.size()) = Eigen::Map<const Vector>(d_weight.data(), d_weight.size());
  grad.segment(d_weight.size(), embedding_bias_.size()) = d_pre.colwise().sum().transpose();
  return grad;
}

std::vector<int> PredictIndices(const Classifier& model, const Matrix& x) {
  const Matrix logits = model.Logits(x);
  std::vector<int> out(static_cast<size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    logits.row(i).maxCoeff(&best);
    out[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double Accuracy(const Classifier& model, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  if (model.label_set() != data.label_set) {
    Fail(ErrorCode::kInvalidInput, "classifier and dataset label sets differ");
  }
  const std::vector<int> predicted = PredictIndices(model, data.instances);
  Index correct = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace ckd

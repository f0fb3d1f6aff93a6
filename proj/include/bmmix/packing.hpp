#ifndef BMMIX_PACKING_HPP
#define BMMIX_PACKING_HPP

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bmmix/common.hpp"

namespace bmmix {

enum class BlockRole { Sigma, WeightsZ, Alpha, Beta, GammaLatents, Kernel };
enum class BlockTransform { Identity, Log, Logit, StickBreaking };

inline const char* to_string(BlockRole r) {
  switch (r) {
    case BlockRole::Sigma: return "sigma";
    case BlockRole::WeightsZ: return "weights-z";
    case BlockRole::Alpha: return "alpha";
    case BlockRole::Beta: return "beta";
    case BlockRole::GammaLatents: return "gamma-latents";
    case BlockRole::Kernel: return "kernel";
  }
  return "?";
}

inline const char* to_string(BlockTransform t) {
  switch (t) {
    case BlockTransform::Identity: return "identity";
    case BlockTransform::Log: return "log";
    case BlockTransform::Logit: return "logit";
    case BlockTransform::StickBreaking: return "stick-breaking";
  }
  return "?";
}

struct ThetaBlock {
  std::string name;
  BlockRole role{};
  BlockTransform transform{};
  Index offset = 0;
  Index length = 0;
};

// Named slices of the unconstrained parameter vector. Blocks are disjoint
// and cover [0, d) in declaration order.
class ThetaPacking {
 public:
  void add(std::string name, BlockRole role, BlockTransform transform, Index length) {
    require(length > 0, "ThetaPacking: block length must be positive");
    for (const auto& b : blocks_)
      require(b.name != name, "ThetaPacking: duplicate block '" + name + "'");
    blocks_.push_back({std::move(name), role, transform, dim_, length});
    dim_ += length;
  }

  Index dim() const { return dim_; }
  const std::vector<ThetaBlock>& blocks() const { return blocks_; }

  const ThetaBlock& block(const std::string& name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return b;
    throw validation_error("ThetaPacking: no block '" + name + "'");
  }

  bool has(const std::string& name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return true;
    return false;
  }

  Eigen::VectorBlock<const VectorXd> slice(const VectorXd& theta, const std::string& name) const {
    const auto& b = block(name);
    return theta.segment(b.offset, b.length);
  }

  Eigen::VectorBlock<VectorXd> slice(VectorXd& theta, const std::string& name) const {
    const auto& b = block(name);
    return theta.segment(b.offset, b.length);
  }

  // One label per unconstrained scalar, used for CSV headers and
  // per-parameter diagnostics.
  std::vector<std::string> scalar_labels() const {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(dim_));
    for (const auto& b : blocks_) {
      if (b.length == 1) {
        out.push_back(b.name);
      } else {
        for (Index i = 0; i < b.length; ++i)
          out.push_back(b.name + "[" + std::to_string(i) + "]");
      }
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : blocks_)
      arr.push_back({{"name", b.name},
                     {"role", to_string(b.role)},
                     {"transform", to_string(b.transform)},
                     {"offset", b.offset},
                     {"length", b.length}});
    return {{"dim", dim_}, {"blocks", arr}};
  }

 private:
  std::vector<ThetaBlock> blocks_;
  Index dim_ = 0;
};

}  // namespace bmmix

#endif  // BMMIX_PACKING_HPP

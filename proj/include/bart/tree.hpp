#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bart/common.hpp"

namespace bart {

enum class RuleKind { Continuous, OneHot, Subset };

// Routing rule of an internal node. Continuous sends x <= value left;
// OneHot sends x == value left; Subset sends x in `subset` left.
struct SplitRule {
  RuleKind kind = RuleKind::Continuous;
  double value = 0.0;                // threshold (Continuous) or category code (OneHot)
  std::vector<double> subset;        // sorted category codes (Subset only)

  bool goes_left(double x) const {
    switch (kind) {
      case RuleKind::Continuous: return x <= value;
      case RuleKind::OneHot: return x == value;
      case RuleKind::Subset:
        for (double c : subset)
          if (x == c) return true;
        return false;
    }
    return false;
  }
};

struct Node {
  int depth = 0;
  long n_obs = 0;
  int split_var = -1;  // -1 marks a leaf
  SplitRule rule;
  int left = -1;
  int right = -1;
  VectorXd value;  // leaf payload, length out_dim

  bool is_leaf() const { return split_var < 0; }
};

// Append-only arena of nodes; node 0 is the root. Trees start as a single
// leaf and only ever grow, so ids stay stable.
class Tree {
 public:
  Tree() = default;
  Tree(VectorXd leaf_value, long n_obs);

  int root() const { return 0; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int out_dim() const { return out_dim_; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<Node>& nodes() const { return nodes_; }

  int n_leaves() const;
  int n_internal() const { return size() - n_leaves(); }
  int max_depth() const;

  // Follows splits to a leaf. Throws DataError on a NaN covariate at a
  // consulted column.
  VectorXd predict(const Eigen::Ref<const RowVectorXd>& x) const;

  // As predict, but a split on an excluded column is marginalized out as the
  // n_obs-weighted average of both branches. Throws DataError if an excluded
  // node has zero total child weight.
  VectorXd predict_excluded(const Eigen::Ref<const RowVectorXd>& x,
                            const std::vector<bool>& excluded) const;

  // Turns a leaf into an internal node with two fresh leaves. Either side of
  // the row partition being empty is an invalid split. Returns (left, right).
  std::pair<int, int> grow_at_leaf(int leaf_id, int split_var, SplitRule rule,
                                   VectorXd left_value, VectorXd right_value,
                                   std::span<const int> left_rows,
                                   std::span<const int> right_rows);

  // Entry j = number of internal nodes splitting on column j.
  VectorXi count_split_vars(int n_columns) const;

  // Sum of parent==left+right checks over all internal nodes.
  bool n_obs_consistent() const;

  bool structurally_equal(const Tree& other) const;

 private:
  Tree(std::vector<Node> nodes, int out_dim) : nodes_(std::move(nodes)), out_dim_(out_dim) {}

  VectorXd predict_from(int id, const Eigen::Ref<const RowVectorXd>& x,
                        const std::vector<bool>* excluded) const;

  friend Tree deserialize_tree(std::istream& is);

  std::vector<Node> nodes_;
  int out_dim_ = 0;
};

// The m trees backing one latent output block. shared_structure is false
// when the model trains one forest per output dimension.
struct Forest {
  std::vector<Tree> trees;
  bool shared_structure = true;

  int out_dim() const { return trees.empty() ? 0 : trees.front().out_dim(); }

  // Sum of per-tree predictions, rows of X by output dimension.
  MatrixXd predict(const Eigen::Ref<const MatrixXd>& X) const;
  MatrixXd predict_excluded(const Eigen::Ref<const MatrixXd>& X,
                            const std::vector<bool>& excluded) const;
};

// Canonical text encoding, one `node` record per line:
//   tree <out_dim> <n_nodes> <root>
//   node <id> <I|L> <depth> <n_obs> <split_var> <C|O|S|-> <payload> <left> <right> <values>
// Absent fields are "-"; payload and values join multiple numbers with ','.
void serialize_tree(const Tree& tree, std::ostream& os);
std::string serialize_tree(const Tree& tree);
Tree deserialize_tree(std::istream& is);
Tree deserialize_tree(const std::string& text);

}  // namespace bart

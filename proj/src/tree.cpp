#include "bart/tree.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace bart {

Tree::Tree(VectorXd leaf_value, long n_obs) : out_dim_(static_cast<int>(leaf_value.size())) {
  Node root;
  root.depth = 0;
  root.n_obs = n_obs;
  root.value = std::move(leaf_value);
  nodes_.push_back(std::move(root));
}

int Tree::n_leaves() const {
  int k = 0;
  for (const Node& n : nodes_) k += n.is_leaf() ? 1 : 0;
  return k;
}

int Tree::max_depth() const {
  int d = 0;
  for (const Node& n : nodes_) d = std::max(d, n.depth);
  return d;
}

VectorXd Tree::predict(const Eigen::Ref<const RowVectorXd>& x) const {
  return predict_from(root(), x, nullptr);
}

VectorXd Tree::predict_excluded(const Eigen::Ref<const RowVectorXd>& x,
                                const std::vector<bool>& excluded) const {
  return predict_from(root(), x, &excluded);
}

VectorXd Tree::predict_from(int id, const Eigen::Ref<const RowVectorXd>& x,
                            const std::vector<bool>* excluded) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.is_leaf()) return n.value;

  if (excluded != nullptr && n.split_var < static_cast<int>(excluded->size()) &&
      (*excluded)[static_cast<std::size_t>(n.split_var)]) {
    const Node& l = nodes_[static_cast<std::size_t>(n.left)];
    const Node& r = nodes_[static_cast<std::size_t>(n.right)];
    const double wl = static_cast<double>(l.n_obs);
    const double wr = static_cast<double>(r.n_obs);
    if (wl + wr <= 0.0)
      throw DataError("degenerate tree: zero total n_obs under excluded node " +
                      std::to_string(id));
    VectorXd vl = predict_from(n.left, x, excluded);
    VectorXd vr = predict_from(n.right, x, excluded);
    return (wl * vl + wr * vr) / (wl + wr);
  }

  const double xv = x(n.split_var);
  if (std::isnan(xv))
    throw DataError("missing covariate at column " + std::to_string(n.split_var) +
                    " consulted by node " + std::to_string(id));
  return predict_from(n.rule.goes_left(xv) ? n.left : n.right, x, excluded);
}

std::pair<int, int> Tree::grow_at_leaf(int leaf_id, int split_var, SplitRule rule,
                                       VectorXd left_value, VectorXd right_value,
                                       std::span<const int> left_rows,
                                       std::span<const int> right_rows) {
  Node& parent = nodes_[static_cast<std::size_t>(leaf_id)];
  if (!parent.is_leaf())
    throw DataError("grow_at_leaf: node " + std::to_string(leaf_id) + " is not a leaf");
  if (left_rows.empty() || right_rows.empty())
    throw DataError("invalid split: empty partition side at leaf " + std::to_string(leaf_id));

  Node l, r;
  l.depth = r.depth = parent.depth + 1;
  l.n_obs = static_cast<long>(left_rows.size());
  r.n_obs = static_cast<long>(right_rows.size());
  l.value = std::move(left_value);
  r.value = std::move(right_value);

  const int left_id = size();
  const int right_id = left_id + 1;
  parent.split_var = split_var;
  parent.rule = std::move(rule);
  parent.left = left_id;
  parent.right = right_id;
  parent.value.resize(0);
  nodes_.push_back(std::move(l));
  nodes_.push_back(std::move(r));
  return {left_id, right_id};
}

VectorXi Tree::count_split_vars(int n_columns) const {
  VectorXi counts = VectorXi::Zero(n_columns);
  for (const Node& n : nodes_)
    if (!n.is_leaf()) counts(n.split_var) += 1;
  return counts;
}

bool Tree::n_obs_consistent() const {
  for (const Node& n : nodes_) {
    if (n.is_leaf()) continue;
    const Node& l = nodes_[static_cast<std::size_t>(n.left)];
    const Node& r = nodes_[static_cast<std::size_t>(n.right)];
    if (n.n_obs != l.n_obs + r.n_obs) return false;
    if (l.depth != n.depth + 1 || r.depth != n.depth + 1) return false;
  }
  return true;
}

bool Tree::structurally_equal(const Tree& other) const {
  if (size() != other.size() || out_dim_ != other.out_dim_) return false;
  for (int i = 0; i < size(); ++i) {
    const Node& a = nodes_[static_cast<std::size_t>(i)];
    const Node& b = other.nodes_[static_cast<std::size_t>(i)];
    if (a.depth != b.depth || a.n_obs != b.n_obs || a.split_var != b.split_var ||
        a.left != b.left || a.right != b.right)
      return false;
    if (a.is_leaf()) {
      if (a.value.size() != b.value.size() || a.value != b.value) return false;
    } else {
      if (a.rule.kind != b.rule.kind || a.rule.value != b.rule.value ||
          a.rule.subset != b.rule.subset)
        return false;
    }
  }
  return true;
}

MatrixXd Forest::predict(const Eigen::Ref<const MatrixXd>& X) const {
  MatrixXd out = MatrixXd::Zero(X.rows(), out_dim());
  for (const Tree& t : trees)
    for (Eigen::Index i = 0; i < X.rows(); ++i) out.row(i) += t.predict(X.row(i)).transpose();
  return out;
}

MatrixXd Forest::predict_excluded(const Eigen::Ref<const MatrixXd>& X,
                                  const std::vector<bool>& excluded) const {
  MatrixXd out = MatrixXd::Zero(X.rows(), out_dim());
  for (const Tree& t : trees)
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      out.row(i) += t.predict_excluded(X.row(i), excluded).transpose();
  return out;
}

namespace {

std::string join_values(const VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) s += ',';
    s += format_double(v(i));
  }
  return s;
}

std::string join_values(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<double> split_values(const std::string& s, int node_id) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    std::string tok = s.substr(start, comma == std::string::npos ? comma : comma - start);
    if (tok.empty())
      throw DataError("tree parse error at node " + std::to_string(node_id) +
                      ": empty numeric field");
    out.push_back(parse_double(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

char rule_tag(RuleKind k) {
  switch (k) {
    case RuleKind::Continuous: return 'C';
    case RuleKind::OneHot: return 'O';
    case RuleKind::Subset: return 'S';
  }
  return '-';
}

}  // namespace

void serialize_tree(const Tree& tree, std::ostream& os) {
  os << "tree " << tree.out_dim() << ' ' << tree.size() << ' ' << tree.root() << '\n';
  for (int id = 0; id < tree.size(); ++id) {
    const Node& n = tree.node(id);
    os << "node " << id << ' ' << (n.is_leaf() ? 'L' : 'I') << ' ' << n.depth << ' ' << n.n_obs
       << ' ' << n.split_var << ' ';
    if (n.is_leaf()) {
      os << "- - " << n.left << ' ' << n.right << ' ' << join_values(n.value);
    } else {
      os << rule_tag(n.rule.kind) << ' ';
      if (n.rule.kind == RuleKind::Subset)
        os << join_values(n.rule.subset);
      else
        os << format_double(n.rule.value);
      os << ' ' << n.left << ' ' << n.right << " -";
    }
    os << '\n';
  }
}

std::string serialize_tree(const Tree& tree) {
  std::ostringstream os;
  serialize_tree(tree, os);
  return os.str();
}

Tree deserialize_tree(std::istream& is) {
  std::string tag;
  int out_dim = 0, n_nodes = 0, root = 0;
  if (!(is >> tag) || tag != "tree" || !(is >> out_dim >> n_nodes >> root))
    throw DataError("tree parse error: missing or malformed tree header");
  if (root != 0 || n_nodes < 1 || out_dim < 1)
    throw DataError("tree parse error: invalid header fields");

  Tree tree(VectorXd::Zero(out_dim), 0);
  std::vector<Node> nodes(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    std::string node_tag, kind, rule_kind, payload, values;
    int id = 0, depth = 0, split_var = 0, left = 0, right = 0;
    long n_obs = 0;
    if (!(is >> node_tag >> id >> kind >> depth >> n_obs >> split_var >> rule_kind >> payload >>
          left >> right >> values) ||
        node_tag != "node")
      throw DataError("tree parse error at node " + std::to_string(i) +
                      ": truncated or malformed record");
    if (id != i) throw DataError("tree parse error: node ids out of order at " + std::to_string(i));

    Node n;
    n.depth = depth;
    n.n_obs = n_obs;
    n.split_var = split_var;
    n.left = left;
    n.right = right;
    if (kind == "L") {
      if (split_var != -1 || left != -1 || right != -1)
        throw DataError("tree parse error at node " + std::to_string(id) +
                        ": leaf with child links");
      std::vector<double> vals = split_values(values, id);
      if (static_cast<int>(vals.size()) != out_dim)
        throw DataError("tree parse error at node " + std::to_string(id) +
                        ": leaf value length mismatch");
      n.value = Eigen::Map<const VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    } else if (kind == "I") {
      if (left < 0 || right < 0 || left >= n_nodes || right >= n_nodes || split_var < 0)
        throw DataError("tree parse error at node " + std::to_string(id) +
                        ": invalid internal links");
      if (rule_kind == "C")
        n.rule.kind = RuleKind::Continuous;
      else if (rule_kind == "O")
        n.rule.kind = RuleKind::OneHot;
      else if (rule_kind == "S")
        n.rule.kind = RuleKind::Subset;
      else
        throw DataError("tree parse error at node " + std::to_string(id) + ": unknown rule kind '" +
                        rule_kind + "'");
      if (n.rule.kind == RuleKind::Subset)
        n.rule.subset = split_values(payload, id);
      else
        n.rule.value = parse_double(payload);
    } else {
      throw DataError("tree parse error at node " + std::to_string(id) + ": unknown node kind '" +
                      kind + "'");
    }
    nodes[static_cast<std::size_t>(id)] = std::move(n);
  }

  // Rebuild through a private-state-free path: steal the arena wholesale.
  struct Access : Tree {
    static Tree from_nodes(std::vector<Node> ns, int dim) {
      Access t;
      t.assign(std::move(ns), dim);
      return t;
    }
    void assign(std::vector<Node> ns, int dim) {
      *static_cast<Tree*>(this) = Tree(VectorXd::Zero(dim), 0);
      raw_nodes() = std::move(ns);
    }
    std::vector<Node>& raw_nodes() {
      return const_cast<std::vector<Node>&>(nodes());
    }
  };
  return Access::from_nodes(std::move(nodes), out_dim);
}

Tree deserialize_tree(const std::string& text) {
  std::istringstream is(text);
  return deserialize_tree(is);
}

}  // namespace bart

#include "powerset/tree.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

namespace powerset {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_token_char(char c) { return c != '(' && c != ')' && !is_space(c); }

}  // namespace

ParseTree parse_bracketed(std::string_view text) {
  ParseTree tree;
  auto& nodes = tree.nodes_;
  std::vector<std::size_t> open;  // stack of internal nodes awaiting ')'
  std::size_t pos = 0;
  const std::size_t n = text.size();

  auto skip_ws = [&] {
    while (pos < n && is_space(text[pos])) ++pos;
  };
  auto read_token = [&] {
    const std::size_t start = pos;
    while (pos < n && is_token_char(text[pos])) ++pos;
    return std::string(text.substr(start, pos - start));
  };

  skip_ws();
  if (pos == n) throw ParseError("empty input, tree has zero leaves", pos);
  if (text[pos] != '(') throw ParseError("expected '('", pos);

  bool done = false;
  while (!done) {
    skip_ws();
    if (pos == n) throw ParseError("unexpected end of input, unbalanced parentheses", pos);
    const char c = text[pos];
    if (c == '(') {
      const std::size_t open_at = pos;
      ++pos;
      skip_ws();
      if (pos == n) throw ParseError("unexpected end of input, unbalanced parentheses", pos);
      if (text[pos] == ')') throw ParseError("empty constituent", open_at);
      if (text[pos] == '(') throw ParseError("constituent is missing a label", pos);
      TreeNode node;
      node.label = read_token();
      node.leaf_begin = tree.leaf_nodes_.size();
      const std::size_t id = nodes.size();
      if (!open.empty()) nodes[open.back()].children.push_back(id);
      nodes.push_back(std::move(node));
      open.push_back(id);
    } else if (c == ')') {
      if (open.empty()) throw ParseError("unbalanced ')'", pos);
      TreeNode& node = nodes[open.back()];
      if (node.children.empty()) throw ParseError("empty constituent", pos);
      node.leaf_end = tree.leaf_nodes_.size();
      open.pop_back();
      ++pos;
      if (open.empty()) done = true;
    } else {
      if (open.empty()) throw ParseError("word outside of any constituent", pos);
      TreeNode leaf;
      leaf.label = read_token();
      leaf.is_leaf = true;
      leaf.leaf_begin = tree.leaf_nodes_.size();
      leaf.leaf_end = leaf.leaf_begin + 1;
      const std::size_t id = nodes.size();
      nodes[open.back()].children.push_back(id);
      tree.leaf_nodes_.push_back(id);
      nodes.push_back(std::move(leaf));
    }
  }
  skip_ws();
  if (pos != n) throw ParseError("trailing input after the root constituent", pos);
  return tree;
}

std::vector<std::string> ParseTree::words() const {
  std::vector<std::string> out;
  out.reserve(leaf_nodes_.size());
  for (std::size_t id : leaf_nodes_) out.push_back(nodes_[id].label);
  return out;
}

std::size_t ParseTree::depth() const {
  if (nodes_.empty()) return 0;
  // Pre-order storage means every parent precedes its children.
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  d[0] = 1;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].is_leaf) continue;
    best = std::max(best, d[id]);
    for (std::size_t c : nodes_[id].children) d[c] = d[id] + 1;
  }
  return best;
}

std::string ParseTree::render() const {
  std::string out;
  if (nodes_.empty()) return out;
  // Iterative pre-order walk; the pair is (node, next child to emit).
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  out += '(';
  out += nodes_[0].label;
  while (!stack.empty()) {
    auto& [id, next] = stack.back();
    const TreeNode& node = nodes_[id];
    if (next == node.children.size()) {
      out += ')';
      stack.pop_back();
      continue;
    }
    const std::size_t child = node.children[next++];
    out += ' ';
    if (nodes_[child].is_leaf) {
      out += nodes_[child].label;
    } else {
      out += '(';
      out += nodes_[child].label;
      stack.emplace_back(child, 0);
    }
  }
  return out;
}

NodeSetPolicy parse_node_policy(std::string_view name) {
  if (name == "all-nodes" || name == "all") return NodeSetPolicy::AllNodes;
  if (name == "internal-only" || name == "internal") return NodeSetPolicy::InternalOnly;
  throw std::invalid_argument("unknown node-set policy '" + std::string(name) + "'");
}

std::string to_string(NodeSetPolicy policy) {
  return policy == NodeSetPolicy::AllNodes ? "all-nodes" : "internal-only";
}

std::vector<std::size_t> enumerate_nodes(const ParseTree& tree, const NodeSetOptions& options) {
  std::vector<std::size_t> out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t id = 0; id < tree.size(); ++id) {
    const TreeNode& node = tree.node(id);
    if (node.is_leaf && options.policy == NodeSetPolicy::InternalOnly) continue;
    if (options.dedupe_spans && !seen.emplace(node.leaf_begin, node.leaf_end).second) continue;
    out.push_back(id);
  }
  return out;
}

std::vector<TokenRange> identity_token_map(const ParseTree& tree) {
  std::vector<TokenRange> map(tree.leaf_count());
  for (std::size_t k = 0; k < map.size(); ++k) map[k] = {k, k + 1};
  return map;
}

NodeTokenMasks node_token_masks(const ParseTree& tree, std::size_t token_count,
                                std::span<const TokenRange> token_map) {
  if (token_map.size() != tree.leaf_count()) {
    throw std::invalid_argument("token map has " + std::to_string(token_map.size()) +
                                " entries for " + std::to_string(tree.leaf_count()) + " leaves");
  }
  NodeTokenMasks out;
  std::vector<unsigned char> used(token_count, 0);
  for (std::size_t k = 0; k < token_map.size(); ++k) {
    const TokenRange r = token_map[k];
    if (r.begin >= r.end) {
      throw std::invalid_argument("leaf " + std::to_string(k) + " has an empty token range");
    }
    if (r.end > token_count) {
      throw std::invalid_argument("leaf " + std::to_string(k) + " token range [" +
                                  std::to_string(r.begin) + "," + std::to_string(r.end) +
                                  ") exceeds " + std::to_string(token_count) + " tokens");
    }
    TokenMask mask(token_count, 0);
    for (std::size_t t = r.begin; t < r.end; ++t) {
      if (used[t]) {
        throw std::invalid_argument("leaf " + std::to_string(k) + " overlaps token " +
                                    std::to_string(t) + " of another leaf");
      }
      used[t] = 1;
      mask[t] = 1;
    }
    out.leaf_masks.push_back(std::move(mask));
  }
  return out;
}

Vector phrase_embed(const EmbeddingMatrix& tokens, std::span<const unsigned char> mask) {
  return masked_unit_sum(tokens, mask);
}

Vector phrase_node_embed(const EmbeddingMatrix& tokens, const TreeNode& node,
                         const NodeTokenMasks& masks) {
  Vector sum(tokens.cols(), 0.0);
  for (const TokenMask& m : masks.masks_of(node)) {
    const Vector psi = phrase_embed(tokens, m);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += psi[k];
  }
  return sum;
}

}  // namespace powerset

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "powerset/core.hpp"

namespace powerset {

/// Malformed bracketed tree. `offset()` is the byte offset into the input
/// where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct TreeNode {
  std::string label;  // constituent tag, or the word for a leaf
  std::vector<std::size_t> children;
  std::size_t leaf_begin = 0;  // leaves covered: [leaf_begin, leaf_end)
  std::size_t leaf_end = 0;
  bool is_leaf = false;

  std::size_t span_size() const { return leaf_end - leaf_begin; }
  bool operator==(const TreeNode&) const = default;
};

/// Constituency tree. Nodes are stored in pre-order; node 0 is the root.
/// Leaves (words) are nodes too, with singleton spans.
class ParseTree {
 public:
  ParseTree() = default;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t size() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaf_nodes_.size(); }
  std::size_t internal_count() const { return nodes_.size() - leaf_nodes_.size(); }

  /// Node id of the k-th leaf in surface order.
  std::size_t leaf_node(std::size_t k) const { return leaf_nodes_.at(k); }
  std::vector<std::string> words() const;

  /// Longest chain of internal nodes from the root to any word.
  std::size_t depth() const;

  std::string render() const;

  bool operator==(const ParseTree& other) const { return nodes_ == other.nodes_; }

 private:
  friend ParseTree parse_bracketed(std::string_view text);
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> leaf_nodes_;
};

/// Parses `(S (NP a dog) (VP sits))`-style bracketed text.
/// Grammar: tree := '(' LABEL (tree | WORD)+ ')'.
ParseTree parse_bracketed(std::string_view text);

enum class NodeSetPolicy { AllNodes, InternalOnly };

struct NodeSetOptions {
  NodeSetPolicy policy = NodeSetPolicy::AllNodes;
  // Keep only the first (outermost) node of each distinct leaf span.
  bool dedupe_spans = false;
};

NodeSetPolicy parse_node_policy(std::string_view name);
std::string to_string(NodeSetPolicy policy);

/// The node list T_j used by the aggregators, in pre-order.
std::vector<std::size_t> enumerate_nodes(const ParseTree& tree, const NodeSetOptions& options = {});

/// Half-open token range [begin, end) assigned to one leaf.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TokenRange&) const = default;
};

using TokenMask = std::vector<unsigned char>;

std::vector<TokenRange> identity_token_map(const ParseTree& tree);

/// One token mask per leaf; node B's mask set is the contiguous slice
/// leaf_masks[B.leaf_begin, B.leaf_end).
struct NodeTokenMasks {
  std::vector<TokenMask> leaf_masks;

  std::span<const TokenMask> masks_of(const TreeNode& node) const {
    return std::span<const TokenMask>(leaf_masks).subspan(node.leaf_begin, node.span_size());
  }
};

/// Throws std::invalid_argument on empty, overlapping or out-of-range ranges.
NodeTokenMasks node_token_masks(const ParseTree& tree, std::size_t token_count,
                                std::span<const TokenRange> token_map);

/// psi(T | P): unit-normalized sum of the masked token rows.
Vector phrase_embed(const EmbeddingMatrix& tokens, std::span<const unsigned char> mask);

/// p_B: sum of the leaf phrase embeddings of `node`, not renormalized.
Vector phrase_node_embed(const EmbeddingMatrix& tokens, const TreeNode& node,
                         const NodeTokenMasks& masks);

}  // namespace powerset

#include <doctest.h>

#include <string>
#include <vector>

#include "oracles.hpp"
#include "powerset/tree.hpp"

using namespace powerset;
using doctest::Approx;

TEST_CASE("minimal tree") {
  const ParseTree t = parse_bracketed("(NP dog)");
  CHECK(t.internal_count() == 1);
  CHECK(t.leaf_count() == 1);
  CHECK(t.root().leaf_begin == 0);
  CHECK(t.root().leaf_end == 1);
  CHECK(t.render() == "(NP dog)");
}

TEST_CASE("three-word sentence spans") {
  const ParseTree t = parse_bracketed("(S (NP a dog) (VP sits))");
  REQUIRE(t.size() == 6);
  CHECK(t.internal_count() == 3);
  CHECK(t.words() == std::vector<std::string>{"a", "dog", "sits"});
  const TreeNode& s = t.node(0);
  const TreeNode& np = t.node(s.children[0]);
  const TreeNode& vp = t.node(s.children[1]);
  CHECK(s.label == "S");
  CHECK(np.label == "NP");
  CHECK(vp.label == "VP");
  CHECK(np.leaf_begin == 0);
  CHECK(np.leaf_end == 2);
  CHECK(vp.leaf_begin == 2);
  CHECK(vp.leaf_end == 3);
  CHECK(s.leaf_end == 3);
  CHECK(t.depth() == 2);
}

TEST_CASE("whitespace is normalized by render") {
  const ParseTree t = parse_bracketed("  (S\n\t(NP  a   dog)(VP sits) )  ");
  CHECK(t.render() == "(S (NP a dog) (VP sits))");
}

TEST_CASE("malformed inputs report positioned errors") {
  struct Case {
    const char* text;
    std::size_t offset;
    const char* message;
  };
  const Case cases[] = {
      {"(S (NP a", 8, "unexpected end of input"},
      {"", 0, "zero leaves"},
      {"   ", 3, "zero leaves"},
      {"(S ())", 3, "empty constituent"},
      {"(S)", 2, "empty constituent"},
      {"(S (NP a)))", 10, "trailing input"},
      {"S (NP a)", 0, "expected '('"},
      {"(S (NP a)) (VP b)", 11, "trailing input"},
      {"((NP a))", 1, "missing a label"},
      {"(S (NP a) (VP b)", 16, "unexpected end of input"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.text);
    try {
      parse_bracketed(c.text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.offset() == c.offset);
      CHECK(std::string(e.what()).find(c.message) != std::string::npos);
      CHECK(std::string(e.what()).find("at byte " + std::to_string(c.offset)) != std::string::npos);
    }
  }
}

TEST_CASE("random trees round-trip") {
  oracle::Gen gen(1234);
  for (int t = 0; t < 300; ++t) {
    const std::string text = gen.tree(gen.index(0, 5));
    const ParseTree tree = parse_bracketed(text);
    CHECK(tree.render() == text);
    CHECK(parse_bracketed(tree.render()) == tree);
  }
}

TEST_CASE("random mutations never crash") {
  oracle::Gen gen(99);
  for (int t = 0; t < 2000; ++t) {
    std::string text = gen.tree(3);
    const std::size_t edits = gen.index(1, 3);
    for (std::size_t e = 0; e < edits && !text.empty(); ++e) {
      const std::size_t at = gen.index(0, text.size() - 1);
      switch (gen.index(0, 2)) {
        case 0: text.erase(at, 1); break;
        case 1: text.insert(at, 1, gen.coin() ? '(' : ')'); break;
        default: text.resize(at); break;
      }
    }
    try {
      const ParseTree tree = parse_bracketed(text);
      CHECK(parse_bracketed(tree.render()) == tree);
    } catch (const ParseError& e) {
      CHECK(e.offset() <= text.size());
    }
  }
}

TEST_CASE("leaf spans partition each node") {
  oracle::Gen gen(7);
  for (int t = 0; t < 200; ++t) {
    const ParseTree tree = parse_bracketed(gen.tree(4));
    for (const TreeNode& n : tree.nodes()) {
      if (n.is_leaf) {
        CHECK(n.span_size() == 1);
        continue;
      }
      std::size_t cursor = n.leaf_begin;
      for (std::size_t c : n.children) {
        CHECK(tree.node(c).leaf_begin == cursor);
        cursor = tree.node(c).leaf_end;
      }
      CHECK(cursor == n.leaf_end);
    }
  }
}

TEST_CASE("node enumeration policies") {
  const ParseTree t = parse_bracketed("(S (NP a dog) (VP sits))");
  CHECK(enumerate_nodes(t, {NodeSetPolicy::AllNodes}).size() == 6);
  CHECK(enumerate_nodes(t, {NodeSetPolicy::InternalOnly}).size() == 3);
  const ParseTree single = parse_bracketed("(NP dog)");
  CHECK(enumerate_nodes(single, {NodeSetPolicy::InternalOnly}) == std::vector<std::size_t>{0});
  CHECK(enumerate_nodes(single, {NodeSetPolicy::AllNodes}).size() == 2);

  // Unary chain: S, NP and the word share one span.
  const ParseTree chain = parse_bracketed("(S (NP dog))");
  NodeSetOptions dedupe;
  dedupe.dedupe_spans = true;
  CHECK(enumerate_nodes(chain, dedupe) == std::vector<std::size_t>{0});
  CHECK(enumerate_nodes(chain).size() == 3);

  CHECK(parse_node_policy("internal-only") == NodeSetPolicy::InternalOnly);
  CHECK(parse_node_policy("all-nodes") == NodeSetPolicy::AllNodes);
  CHECK_THROWS(parse_node_policy("leaves"));
}

TEST_CASE("token masks") {
  const ParseTree t = parse_bracketed("(S (NP a dog) (VP sits))");
  const auto map = identity_token_map(t);
  const NodeTokenMasks masks = node_token_masks(t, 3, map);
  REQUIRE(masks.leaf_masks.size() == 3);
  CHECK(masks.leaf_masks[0] == TokenMask{1, 0, 0});
  CHECK(masks.leaf_masks[1] == TokenMask{0, 1, 0});
  CHECK(masks.leaf_masks[2] == TokenMask{0, 0, 1});
  const auto np = masks.masks_of(t.node(t.root().children[0]));
  REQUIRE(np.size() == 2);
  CHECK(np[0] == TokenMask{1, 0, 0});
  CHECK(np[1] == TokenMask{0, 1, 0});

  const ParseTree one = parse_bracketed("(NP dog)");
  CHECK(node_token_masks(one, 1, identity_token_map(one)).leaf_masks[0] == TokenMask{1});

  // "dog" spans two subword tokens.
  const std::vector<TokenRange> multi{{0, 1}, {1, 3}, {3, 4}};
  CHECK(node_token_masks(t, 4, multi).leaf_masks[1] == TokenMask{0, 1, 1, 0});

  CHECK_THROWS(node_token_masks(t, 4, std::vector<TokenRange>{{0, 1}, {1, 1}, {3, 4}}));
  CHECK_THROWS(node_token_masks(t, 4, std::vector<TokenRange>{{0, 2}, {1, 3}, {3, 4}}));
  CHECK_THROWS(node_token_masks(t, 3, std::vector<TokenRange>{{0, 1}, {1, 2}, {2, 4}}));
  CHECK_THROWS(node_token_masks(t, 3, std::vector<TokenRange>{{0, 1}, {1, 2}}));
}

TEST_CASE("phrase embeddings") {
  const Matrix a = Matrix::from_rows({{0.0, 1.0}});
  CHECK(phrase_embed(a, std::vector<unsigned char>{1}) == Vector{0.0, 1.0});

  const Matrix b = Matrix::from_rows({{1.0, 0.0}, {1.0, 0.0}});
  CHECK(phrase_embed(b, std::vector<unsigned char>{1, 1}) == Vector{1.0, 0.0});

  const Matrix c = Matrix::from_rows({{2.0, 1.0}, {0.0, 3.0}});
  const Vector v = phrase_embed(c, std::vector<unsigned char>{1, 1});
  CHECK(v[0] == Approx(0.4472135954999579).epsilon(1e-14));
  CHECK(v[1] == Approx(0.8944271909999159).epsilon(1e-14));
}

TEST_CASE("phrase node embeddings sum leaf unit vectors") {
  const ParseTree t = parse_bracketed("(S (NP a dog) (VP sits))");
  const Matrix tokens = Matrix::from_rows({{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {3.0, 0.0, 4.0}});
  const NodeTokenMasks masks = node_token_masks(t, 3, identity_token_map(t));

  const TreeNode& np = t.node(t.root().children[0]);
  CHECK(phrase_node_embed(tokens, np, masks) == Vector{1.0, 1.0, 0.0});

  const Vector root = phrase_node_embed(tokens, t.root(), masks);
  CHECK(root[0] == Approx(1.6));
  CHECK(root[1] == Approx(1.0));
  CHECK(root[2] == Approx(0.8));

  const TreeNode& sits = t.node(t.leaf_node(2));
  const Vector leaf = phrase_node_embed(tokens, sits, masks);
  const Vector direct = phrase_embed(tokens, masks.leaf_masks[2]);
  for (std::size_t k = 0; k < 3; ++k) CHECK(leaf[k] == Approx(direct[k]));
}

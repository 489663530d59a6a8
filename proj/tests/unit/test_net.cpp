#include <doctest.h>

#include "lpq/net.hpp"
#include "lpq/reference.hpp"

using namespace lpq;

namespace {

Layer conv(std::string id, int in_c, int out_c, int k, int stride, int pad) {
  Layer l;
  l.id = std::move(id);
  l.kind = LayerKind::Conv2D;
  l.out_channels = out_c;
  l.kernel = k;
  l.stride = stride;
  l.pad = pad;
  l.weights.emplace_back("kernel", Tensor({out_c, in_c, k, k}));
  l.weights.emplace_back("bias", Tensor({out_c}));
  return l;
}

Layer plain(std::string id, LayerKind kind) {
  Layer l;
  l.id = std::move(id);
  l.kind = kind;
  return l;
}

}  // namespace

TEST_CASE("tensor construction invariants") {
  CHECK_THROWS_AS(Tensor({0}), Error);
  CHECK_THROWS_AS(Tensor({2, -1}), Error);
  CHECK_THROWS_AS(Tensor({1, 1, 1, 1, 1}), Error);
  CHECK_THROWS_AS(Tensor({3}, {1.0f, 2.0f}), Error);
  const Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.all_finite());
}

TEST_CASE("shape propagation") {
  SUBCASE("conv arithmetic") {
    Network net;
    net.input_shape = {3, 32, 32};
    net.layers.push_back(conv("c", 3, 8, 3, 1, 1));
    const auto shapes = propagate_shapes(net);
    REQUIRE(shapes.size() == 1);
    CHECK(shapes[0] == Shape{8, 32, 32});
  }
  SUBCASE("empty network") {
    Network net;
    CHECK(propagate_shapes(net).empty());
  }
  SUBCASE("fully connected") {
    Network net;
    net.input_shape = {10};
    Layer fc;
    fc.id = "fc";
    fc.kind = LayerKind::FullyConnected;
    fc.out_features = 5;
    fc.weights.emplace_back("kernel", Tensor({5, 10}));
    fc.weights.emplace_back("bias", Tensor({5}));
    net.layers.push_back(std::move(fc));
    CHECK(propagate_shapes(net) == std::vector<Shape>{{5}});
  }
  SUBCASE("errors name the offending layer") {
    Network net;
    net.input_shape = {3, 8, 8};
    net.layers.push_back(conv("first", 3, 4, 3, 1, 1));
    net.layers.push_back(conv("broken", 8, 4, 3, 1, 1));  // expects 8 in-channels, gets 4
    try {
      propagate_shapes(net);
      FAIL("expected a shape error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Shape);
      CHECK(std::string(e.what()).find("broken") != std::string::npos);
    }
  }
  SUBCASE("duplicate ids rejected") {
    Network net;
    net.input_shape = {3, 8, 8};
    net.layers.push_back(plain("x", LayerKind::ReLU));
    net.layers.push_back(plain("x", LayerKind::ReLU));
    CHECK_THROWS_AS(propagate_shapes(net), Error);
  }
  SUBCASE("oversized pool window rejected") {
    Network net;
    net.input_shape = {1, 2, 2};
    Layer p = plain("p", LayerKind::MaxPool2D);
    p.window = 5;
    p.stride = 1;
    net.layers.push_back(std::move(p));
    CHECK_THROWS_AS(propagate_shapes(net), Error);
  }
}

TEST_CASE("fusion groups") {
  const Network net = make_reference_network();
  // conv1+bn1+relu1 | pool1 | conv2+relu2 | fc1 | softmax1
  const auto groups = fusion_groups(net);
  REQUIRE(groups.size() == 5);
  CHECK(net.layers[groups[0].head].id == "conv1");
  CHECK(net.layers[groups[0].last].id == "relu1");
  CHECK(net.layers[groups[1].head].id == "pool1");
  CHECK(net.layers[groups[1].last].id == "pool1");
  CHECK(net.layers[groups[2].head].id == "conv2");
  CHECK(net.layers[groups[2].last].id == "relu2");
  CHECK(net.layers[groups[3].head].id == "fc1");
  CHECK(net.layers[groups[4].head].id == "softmax1");

  const auto of = fusion_group_of(net);
  CHECK(of[net.layer_index("bn1")] == 0);
  CHECK(of[net.layer_index("relu2")] == 2);
}

TEST_CASE("reference network propagates") {
  const Network net = make_reference_network();
  const auto shapes = propagate_shapes(net);
  REQUIRE(shapes.size() == 8);
  CHECK(shapes[0] == Shape{8, 16, 16});   // conv1
  CHECK(shapes[3] == Shape{8, 8, 8});     // pool1
  CHECK(shapes[4] == Shape{16, 8, 8});    // conv2
  CHECK(shapes[6] == Shape{10});          // fc1
  CHECK(shapes[7] == Shape{10});          // softmax1
}

#pragma once

#include <Eigen/Dense>

#include "gnelin/game.hpp"
#include "gnelin/topology.hpp"

namespace fixture {

/// (x_i - c_i)^2 with c = (3, 2), x_1 + x_2 <= 4 split as b_i = 2.
inline gnelin::AffineGame two_player(double b_each = 2.0) {
  return gnelin::scalar_quadratic_game(Eigen::Vector2d(3.0, 2.0),
                                       Eigen::Vector2d(b_each, b_each));
}

/// Two nodes with lazy weights 3/4, 1/4, so sigma = 1/2 rather than 0.
inline gnelin::Topology two_node_lazy() {
  Eigen::Matrix2d W;
  W << 0.75, 0.25, 0.25, 0.75;
  return gnelin::make_topology(gnelin::path_graph(2), W);
}

/// Five players, targets (3, 2, 4, 1, 5), sum x <= 10: x* = (2, 1, 3, 0, 4),
/// lambda* = 2.
inline gnelin::AffineGame five_player() {
  Eigen::VectorXd t(5);
  t << 3, 2, 4, 1, 5;
  return gnelin::scalar_quadratic_game(t, Eigen::VectorXd::Constant(5, 2.0));
}

inline gnelin::Topology ring5() { return gnelin::make_topology(gnelin::ring_graph(5)); }

}  // namespace fixture

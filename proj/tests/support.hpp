#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "edgecache/model.hpp"

namespace edgecache::testing {

inline Provider make_provider(std::vector<double> demand, std::vector<double> availability,
                              double cap = 10.0, double price = 0.0) {
  Provider p;
  p.name = "cp";
  for (std::size_t i = 0; i < demand.size(); ++i) {
    p.classes.push_back({demand[i], 1, availability[i]});
  }
  p.cap = cap;
  p.price = price;
  return p;
}

inline double log_uniform(std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(gen));
}

}  // namespace edgecache::testing

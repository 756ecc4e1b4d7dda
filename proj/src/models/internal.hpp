#pragma once

#include <utility>

#include "mhnt/models.hpp"

namespace mhnt::learn::detail {

int argmax_lowest(const std::vector<double>& v);
void softmax_inplace(std::vector<double>& v);

TreeParams fit_dt(const std::vector<Row>& Xs, const std::vector<int>& y,
                  std::size_t n_classes, const HyperParams& hyper);
ForestParams fit_rf(const std::vector<Row>& Xs, const std::vector<int>& y,
                    std::size_t n_classes, const HyperParams& hyper,
                    std::uint64_t seed);
std::pair<SvmParams, double> fit_svm(const std::vector<Row>& Xs,
                                     const std::vector<int>& y,
                                     std::size_t n_classes,
                                     const HyperParams& hyper,
                                     std::uint64_t seed);
NbParams fit_nb(const std::vector<Row>& Xs, const std::vector<int>& y,
                std::size_t n_classes, const HyperParams& hyper);
std::pair<MlpParams, std::vector<double>> fit_mlp(const std::vector<Row>& Xs,
                                                  const std::vector<int>& y,
                                                  std::size_t n_classes,
                                                  const HyperParams& hyper,
                                                  std::uint64_t seed);
std::pair<GbtParams, std::vector<double>> fit_gbt(const std::vector<Row>& Xs,
                                                  const std::vector<int>& y,
                                                  std::size_t n_classes,
                                                  const HyperParams& hyper);

std::vector<double> rf_scores(const ForestParams& p, const Row& x,
                              std::size_t n_classes);
std::vector<double> svm_scores(const SvmParams& p, const Row& x);
std::vector<double> nb_scores(const NbParams& p, const Row& x);
std::vector<double> mlp_scores(const MlpParams& p, const Row& x);
std::vector<double> gbt_scores(const GbtParams& p, const Row& x,
                               std::size_t n_classes);

}  // namespace mhnt::learn::detail

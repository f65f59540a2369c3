#include "support/query_fuzz.hpp"

#include <set>

#include "arspl/suggest/suggest.hpp"

namespace arspl::testing {

QueryFuzzResult check_query_instance(Rng& rng) {
  QueryFuzzResult r;
  const int n = 1 + static_cast<int>(rng.below(60));
  uncertainty::SuperpixelUncertainty u{std::vector<double>(n)};
  const bool coarse = rng.uniform() < 0.5;  // many ties
  for (double& v : u.values) v = coarse ? static_cast<double>(rng.below(4)) / 3.0 : rng.uniform();

  std::set<int> labeled;
  for (int id = 0; id < n; ++id) {
    if (rng.uniform() < 0.2) labeled.insert(id);
  }
  suggest::AnnotationStore store;
  for (int id : labeled) store.labeled[id] = {0};

  const int rounds = 1 + static_cast<int>(rng.below(4));
  for (int round = 0; round < rounds; ++round) {
    const int n_b = static_cast<int>(rng.below(10));
    const suggest::QueryBatch b = suggest::select_queries(u, store.ids(), n_b);
    const std::set<int> chosen(b.superpixels.begin(), b.superpixels.end());
    int pool = 0;
    for (int id = 0; id < n; ++id) pool += store.contains(id) ? 0 : 1;
    if (static_cast<int>(b.superpixels.size()) != std::min(n_b, pool)) r.top_k = false;
    if (chosen.size() != b.superpixels.size()) r.top_k = false;
    for (int q : b.superpixels) {
      if (store.contains(q)) r.disjoint = false;
      for (int other = 0; other < n; ++other) {
        if (store.contains(other) || chosen.count(other)) continue;
        if (u.values[q] < u.values[other]) r.top_k = false;
      }
    }

    uncertainty::SuperpixelUncertainty scaled = u;
    const double c = rng.uniform(0.01, 100.0);
    for (double& v : scaled.values) v *= c;
    if (suggest::select_queries(scaled, store.ids(), n_b).superpixels != b.superpixels) r.scale_invariant = false;

    suggest::AnnotationSet answer;
    for (int q : b.superpixels) answer.superpixels.push_back({q, {1}});
    try {
      suggest::merge_annotations(store, answer);
    } catch (const std::exception&) {
      r.disjoint = false;
    }
  }
  return r;
}

}  // namespace arspl::testing

#include <algorithm>
#include <random>
#include <set>

#include "eegcaps/error.hpp"
#include "eegcaps/experiment.hpp"

namespace eegcaps {

namespace {

template <typename V>
void shuffle_in_place(V& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng() % i]);
}

}  // namespace

std::vector<SubjectRef> subjects_of(const CohortManifest& manifest) {
  std::vector<SubjectRef> out;
  out.reserve(manifest.subjects.size());
  for (const auto& s : manifest.subjects) out.push_back({s.id, s.group});
  return out;
}

std::vector<SubjectRef> subjects_of(std::span<const FeatureImage> images) {
  std::vector<SubjectRef> out;
  std::set<std::string> seen;
  for (const auto& img : images) {
    if (seen.insert(img.subject_id).second) out.push_back({img.subject_id, img.group});
  }
  return out;
}

std::size_t FoldPlan::fold_of(const std::string& subject_id) const {
  const auto it = assignment.find(subject_id);
  if (it == assignment.end()) fail(ErrorCode::InvalidArgument, "subject " + subject_id + " has no fold");
  return it->second;
}

std::vector<std::string> FoldPlan::subjects_in(std::size_t fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignment) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

FoldPlan make_folds(std::span<const SubjectRef> subjects, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "need at least two folds");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;

  std::mt19937_64 rng(seed);
  for (Group group : {Group::HC, Group::PD}) {
    std::vector<std::string> ids;
    for (const auto& s : subjects) {
      if (s.group == group) ids.push_back(s.id);
    }
    if (ids.size() < k) {
      fail(ErrorCode::FoldImbalance, std::string(to_string(group)) + " has " +
                                         std::to_string(ids.size()) + " subjects, fewer than " +
                                         std::to_string(k) + " folds");
    }
    std::sort(ids.begin(), ids.end());
    shuffle_in_place(ids, rng);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!plan.assignment.emplace(ids[i], i % k).second) {
        fail(ErrorCode::DuplicateSubject, "duplicate subject " + ids[i]);
      }
    }
  }
  return plan;
}

FoldPlan make_folds(const CohortManifest& manifest, std::size_t k, std::uint64_t seed) {
  const auto subjects = subjects_of(manifest);
  return make_folds(subjects, k, seed);
}

std::map<std::string, Group> balanced_label_shuffle(std::span<const SubjectRef> subjects,
                                                    std::uint64_t seed) {
  std::vector<std::string> hc, pd;
  std::map<std::string, Group> labels;
  for (const auto& s : subjects) {
    (s.group == Group::PD ? pd : hc).push_back(s.id);
    labels[s.id] = s.group;
  }
  std::sort(hc.begin(), hc.end());
  std::sort(pd.begin(), pd.end());
  std::mt19937_64 rng(seed);
  shuffle_in_place(hc, rng);
  shuffle_in_place(pd, rng);
  const std::size_t swaps = std::min(hc.size(), pd.size()) / 2;
  for (std::size_t i = 0; i < swaps; ++i) {
    labels[hc[i]] = Group::PD;
    labels[pd[i]] = Group::HC;
  }
  return labels;
}

void relabel(std::vector<FeatureImage>& images, const std::map<std::string, Group>& labels) {
  for (auto& img : images) {
    const auto it = labels.find(img.subject_id);
    if (it == labels.end()) fail(ErrorCode::InvalidArgument, "no label for " + img.subject_id);
    img.group = it->second;
  }
}

}  // namespace eegcaps

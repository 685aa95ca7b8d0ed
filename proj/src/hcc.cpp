#include "hct/hcc.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace hct {

Hcc::Builder::Builder(std::vector<std::string> element_labels) {
  complex_.elements_ = std::move(element_labels);
  complex_.cells_.reserve(complex_.elements_.size());
  for (CellId i = 0; i < complex_.elements_.size(); ++i) {
    complex_.cells_.push_back(Cell{0, {i}});
  }
}

CellId Hcc::Builder::add_cell(int rank, std::vector<CellId> children) {
  if (rank < 1 || rank > Hcc::kMaxRank) {
    throw structure_error("cell rank must be in [1, " + std::to_string(Hcc::kMaxRank) + "], got " +
                          std::to_string(rank));
  }
  if (children.empty()) {
    throw structure_error("rank-" + std::to_string(rank) + " cell must have children");
  }
  std::sort(children.begin(), children.end());
  children.erase(std::unique(children.begin(), children.end()), children.end());
  for (CellId c : children) {
    if (c >= complex_.cells_.size()) {
      throw structure_error("unknown child cell id " + std::to_string(c));
    }
    if (complex_.cells_[c].rank != rank - 1) {
      throw structure_error("rank-" + std::to_string(rank) + " cell contains a rank-" +
                            std::to_string(complex_.cells_[c].rank) + " child");
    }
  }
  std::string key = std::to_string(rank);
  for (CellId c : children) {
    key += ',';
    key += std::to_string(c);
  }
  auto it = interned_.find(key);
  if (it != interned_.end()) return it->second;
  CellId id = static_cast<CellId>(complex_.cells_.size());
  complex_.cells_.push_back(Cell{rank, std::move(children)});
  complex_.max_rank_ = std::max(complex_.max_rank_, rank);
  interned_.emplace(std::move(key), id);
  return id;
}

std::vector<CellId> Hcc::level(int rank) const {
  std::vector<CellId> out;
  for (CellId i = 0; i < cells_.size(); ++i) {
    if (cells_[i].rank == rank) out.push_back(i);
  }
  return out;
}

std::vector<CellId> Hcc::restrict_to(CellId cell_id, int level) const {
  if (cell_id >= cells_.size()) throw structure_error("unknown cell id");
  const int r = cells_[cell_id].rank;
  if (level >= r) {
    throw structure_error("restrict: level " + std::to_string(level) +
                          " must be below cell rank " + std::to_string(r));
  }
  std::set<CellId> frontier{cell_id};
  for (int k = r; k > level; --k) {
    std::set<CellId> next;
    for (CellId c : frontier) {
      for (CellId ch : cells_[c].children) next.insert(ch);
    }
    frontier.swap(next);
  }
  return std::vector<CellId>(frontier.begin(), frontier.end());
}

std::string Hcc::to_json() const {
  nlohmann::json j;
  j["elements"] = elements_;
  nlohmann::json cells = nlohmann::json::array();
  for (CellId i = static_cast<CellId>(elements_.size()); i < cells_.size(); ++i) {
    nlohmann::json c;
    c["rank"] = cells_[i].rank;
    nlohmann::json ch = nlohmann::json::array();
    for (CellId x : cells_[i].children) {
      // rank-1 children are element indices; deeper children index this array
      if (cells_[i].rank == 1) {
        ch.push_back(x);
      } else {
        ch.push_back(x - static_cast<CellId>(elements_.size()));
      }
    }
    c["children"] = ch;
    cells.push_back(c);
  }
  j["cells"] = cells;
  return j.dump();
}

Hcc Hcc::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<std::string> labels;
  for (const auto& e : j.at("elements")) labels.push_back(e.get<std::string>());
  Builder b(std::move(labels));
  const size_t num_elems = b.num_elements();
  std::vector<CellId> file_to_id;
  for (const auto& c : j.at("cells")) {
    int rank = c.at("rank").get<int>();
    std::vector<CellId> children;
    for (const auto& ch : c.at("children")) {
      uint64_t raw = ch.get<uint64_t>();
      if (rank == 1) {
        if (raw >= num_elems) throw structure_error("rank-1 child out of element range");
        children.push_back(static_cast<CellId>(raw));
      } else {
        if (raw >= file_to_id.size()) throw structure_error("cell child references a later cell");
        children.push_back(file_to_id[raw]);
      }
    }
    file_to_id.push_back(b.add_cell(rank, std::move(children)));
  }
  return b.build();
}

bool is_partition(const std::vector<std::vector<CellId>>& parts,
                  const std::vector<CellId>& universe) {
  std::set<CellId> seen;
  size_t total = 0;
  for (const auto& p : parts) {
    std::set<CellId> part(p.begin(), p.end());
    total += part.size();
    for (CellId c : part) {
      if (!seen.insert(c).second) return false;  // overlap
    }
  }
  std::set<CellId> uni(universe.begin(), universe.end());
  return total == uni.size() && seen == uni;
}

Transversals::Transversals(std::vector<std::vector<CellId>> parts) : parts_(std::move(parts)) {
  for (auto& p : parts_) {
    if (p.empty()) throw structure_error("degenerate partition: empty part");
    std::sort(p.begin(), p.end());
  }
  cursor_.assign(parts_.size(), 0);
}

uint64_t Transversals::count() const {
  uint64_t n = 1;
  for (const auto& p : parts_) n *= p.size();
  return n;
}

bool Transversals::next(std::vector<CellId>& out) {
  if (exhausted_) return false;
  if (parts_.empty()) {
    // single empty transversal of the empty partition
    out.clear();
    exhausted_ = true;
    return true;
  }
  out.resize(parts_.size());
  for (size_t i = 0; i < parts_.size(); ++i) out[i] = parts_[i][cursor_[i]];
  for (size_t i = parts_.size(); i-- > 0;) {
    if (++cursor_[i] < parts_[i].size()) return true;
    cursor_[i] = 0;
    if (i == 0) exhausted_ = true;
  }
  return true;
}

std::vector<std::vector<CellId>> Transversals::all() {
  reset();
  std::vector<std::vector<CellId>> out;
  std::vector<CellId> t;
  while (next(t)) out.push_back(t);
  return out;
}

}  // namespace hct

#include "hct/modemap.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "json.hpp"

namespace hct {

std::string ModeMap::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["source"] = source.dims;
  j["target"] = target.dims;
  if (kind == "unfold") {
    j["patch"] = patch;
    j["stride"] = stride;
  } else if (kind == "permute") {
    j["perm"] = perm;
  } else if (kind == "custom" || kind == "collapse") {
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& [s, t] : pairs) ps.push_back(nlohmann::json::array({s, t}));
    j["pairs"] = ps;
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : components) {
      cs.push_back({{"source_modes", c.source_modes}, {"target_modes", c.target_modes}});
    }
    j["mmcs"] = cs;
  }
  return j.dump();
}

ModeMap ModeMap::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::string kind = j.at("kind").get<std::string>();
  Shape source, target;
  for (const auto& d : j.at("source")) source.dims.push_back(d.get<int64_t>());
  if (kind == "unfold") {
    std::vector<int64_t> patch, stride;
    for (const auto& d : j.at("patch")) patch.push_back(d.get<int64_t>());
    for (const auto& d : j.at("stride")) stride.push_back(d.get<int64_t>());
    return unfold(source, patch, stride);
  }
  if (kind == "permute") {
    std::vector<size_t> perm;
    for (const auto& d : j.at("perm")) perm.push_back(d.get<size_t>());
    return permute(source, perm);
  }
  if (kind == "flatten") return flatten(source);
  for (const auto& d : j.at("target")) target.dims.push_back(d.get<int64_t>());
  if (kind == "reshape") return reshape(source, target);
  if (kind == "custom" || kind == "collapse") {
    ModeMap m;
    m.kind = kind;
    m.source = std::move(source);
    m.target = std::move(target);
    for (const auto& p : j.at("pairs")) {
      m.pairs.push_back({p.at(0).get<int64_t>(), p.at(1).get<int64_t>()});
    }
    if (j.contains("mmcs")) {
      for (const auto& c : j["mmcs"]) {
        Mmc mm;
        for (const auto& x : c.at("source_modes")) mm.source_modes.push_back(x.get<size_t>());
        for (const auto& x : c.at("target_modes")) mm.target_modes.push_back(x.get<size_t>());
        m.components.push_back(std::move(mm));
      }
    }
    return m;
  }
  throw structure_error("unknown mode map kind: " + kind);
}

namespace {

// true if the relation restricted to (domain side) is single-valued
bool functional(const std::vector<std::pair<int64_t, int64_t>>& pairs, bool source_side) {
  std::set<int64_t> seen;
  for (const auto& [s, t] : pairs) {
    if (!seen.insert(source_side ? s : t).second) return false;
  }
  return true;
}

}  // namespace

ModeMapReport verify_mode_map(const ModeMap& m) {
  ModeMapReport rep;
  // Pick the direction in which the relation is a function.
  bool fwd = functional(m.pairs, true);
  bool bwd = functional(m.pairs, false);
  if (!fwd && !bwd) {
    rep.ok = false;
    rep.violations.push_back("relation is single-valued in neither direction");
    return rep;
  }
  // domain = the side the function maps from
  const bool from_source = fwd;
  const Shape& dom = from_source ? m.source : m.target;
  const Shape& cod = from_source ? m.target : m.source;

  std::vector<int64_t> dc, cc;
  for (const auto& comp : m.components) {
    const auto& dom_modes = from_source ? comp.source_modes : comp.target_modes;
    const auto& cod_modes = from_source ? comp.target_modes : comp.source_modes;
    if (dom_modes.empty() || cod_modes.empty()) {
      rep.ok = false;
      rep.violations.push_back("component with an empty side");
      continue;
    }
    // key = coords outside the component's modes; all images of one slice must
    // share the complement key on the codomain side
    auto key_outside = [](const Shape& s, const std::vector<int64_t>& c,
                          const std::vector<size_t>& inside) {
      std::vector<int64_t> key;
      for (size_t i = 0; i < s.order(); ++i) {
        if (std::find(inside.begin(), inside.end(), i) == inside.end()) key.push_back(c[i]);
      }
      return key;
    };
    std::map<std::vector<int64_t>, std::vector<int64_t>> slice_image;
    for (const auto& [ps, pt] : m.pairs) {
      int64_t d = from_source ? ps : pt;
      int64_t c = from_source ? pt : ps;
      unflatten(dom, d, dc);
      unflatten(cod, c, cc);
      auto dkey = key_outside(dom, dc, dom_modes);
      auto ckey = key_outside(cod, cc, cod_modes);
      auto it = slice_image.find(dkey);
      if (it == slice_image.end()) {
        slice_image.emplace(dkey, ckey);
      } else if (it->second != ckey) {
        rep.ok = false;
        std::string msg = "slice at (";
        for (size_t i = 0; i < dkey.size(); ++i) msg += (i ? "," : "") + std::to_string(dkey[i]);
        msg += ") maps across two codomain slices";
        rep.violations.push_back(msg);
      }
    }
  }
  return rep;
}

ModeMap unfold(const Shape& image, const std::vector<int64_t>& patch,
               const std::vector<int64_t>& stride) {
  if (image.order() != 3) throw shape_error("unfold: image must be (C,H,W)");
  if (patch.size() != 2 || stride.size() != 2) throw shape_error("unfold: patch/stride are 2-d");
  const int64_t C = image.dims[0], H = image.dims[1], W = image.dims[2];
  const int64_t ph = patch[0], pw = patch[1], sh = stride[0], sw = stride[1];
  if (ph < 1 || pw < 1 || sh < 1 || sw < 1) throw shape_error("unfold: patch/stride must be >= 1");
  if (ph > H || pw > W) throw shape_error("unfold: patch larger than image");
  const int64_t hp = (H - ph) / sh + 1;
  const int64_t wp = (W - pw) / sw + 1;
  ModeMap m;
  m.kind = "unfold";
  m.source = image;
  m.target = Shape{{C, hp, wp, ph, pw}};
  m.patch = patch;
  m.stride = stride;
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t a = 0; a < hp; ++a) {
      for (int64_t b = 0; b < wp; ++b) {
        for (int64_t i = 0; i < ph; ++i) {
          for (int64_t j = 0; j < pw; ++j) {
            int64_t src = (c * H + (a * sh + i)) * W + (b * sw + j);
            int64_t tgt = (((c * hp + a) * wp + b) * ph + i) * pw + j;
            m.pairs.push_back({src, tgt});
          }
        }
      }
    }
  }
  // channel slices stay channel slices; (h', p_h) pairs collapse onto H, and
  // (w', p_w) onto W
  m.components = {Mmc{{0}, {0}}, Mmc{{1}, {1, 3}}, Mmc{{2}, {2, 4}}};
  return m;
}

ModeMap permute(const Shape& source, const std::vector<size_t>& perm) {
  if (perm.size() != source.order()) throw shape_error("permute: arity mismatch");
  std::vector<bool> used(perm.size(), false);
  ModeMap m;
  m.kind = "permute";
  m.source = source;
  m.target.dims.resize(source.order());
  for (size_t t = 0; t < perm.size(); ++t) {
    if (perm[t] >= source.order() || used[perm[t]]) throw shape_error("permute: not a permutation");
    used[perm[t]] = true;
    m.target.dims[t] = source.dims[perm[t]];
    m.perm.push_back(static_cast<int64_t>(perm[t]));
  }
  std::vector<int64_t> sc(source.order()), tc(source.order());
  for (int64_t f = 0; f < source.volume(); ++f) {
    unflatten(source, f, sc);
    for (size_t t = 0; t < perm.size(); ++t) tc[t] = sc[perm[t]];
    m.pairs.push_back({f, flat_index(m.target, tc)});
  }
  for (size_t t = 0; t < perm.size(); ++t) m.components.push_back(Mmc{{perm[t]}, {t}});
  return m;
}

ModeMap flatten(const Shape& source) {
  ModeMap m;
  m.kind = "flatten";
  m.source = source;
  m.target = Shape{{source.volume()}};
  for (int64_t f = 0; f < source.volume(); ++f) m.pairs.push_back({f, f});
  Mmc all;
  for (size_t i = 0; i < source.order(); ++i) all.source_modes.push_back(i);
  all.target_modes = {0};
  m.components = {all};
  return m;
}

ModeMap reshape(const Shape& source, const Shape& target) {
  if (source.volume() != target.volume()) throw shape_error("reshape: volume mismatch");
  ModeMap m;
  m.kind = "reshape";
  m.source = source;
  m.target = target;
  for (int64_t f = 0; f < source.volume(); ++f) m.pairs.push_back({f, f});
  Mmc all;
  for (size_t i = 0; i < source.order(); ++i) all.source_modes.push_back(i);
  for (size_t i = 0; i < target.order(); ++i) all.target_modes.push_back(i);
  m.components = {all};
  return m;
}

Mda apply(const ModeMap& m, const Mda& source_data) {
  if (source_data.shape() != m.source) throw shape_error("apply: source shape mismatch");
  std::vector<int64_t> written(static_cast<size_t>(m.target.volume()), -1);
  for (const auto& [s, t] : m.pairs) {
    if (written[static_cast<size_t>(t)] >= 0) {
      throw shape_error("apply: target position written twice");
    }
    written[static_cast<size_t>(t)] = s;
  }
  Mda::Builder b(m.target);
  for (int64_t t = 0; t < m.target.volume(); ++t) {
    int64_t s = written[static_cast<size_t>(t)];
    if (s < 0) {
      b.push_absent();
    } else {
      b.push_cell(source_data.cell(s));
    }
  }
  return b.build();
}

Mda apply_reverse(const ModeMap& m, const Mda& target_data) {
  if (target_data.shape() != m.target) throw shape_error("apply_reverse: target shape mismatch");
  std::vector<int64_t> written(static_cast<size_t>(m.source.volume()), -1);
  for (const auto& [s, t] : m.pairs) {
    if (written[static_cast<size_t>(s)] >= 0) {
      throw shape_error("apply_reverse: source position written twice");
    }
    written[static_cast<size_t>(s)] = t;
  }
  Mda::Builder b(m.source);
  for (int64_t s = 0; s < m.source.volume(); ++s) {
    int64_t t = written[static_cast<size_t>(s)];
    if (t < 0) {
      b.push_absent();
    } else {
      b.push_cell(target_data.cell(t));
    }
  }
  return b.build();
}

NonInjectiveDecomposition noninjective_as_modemap(const Mda& m) {
  if (m.is_hyper()) throw shape_error("noninjective_as_modemap: operand must not be hyper");
  NonInjectiveDecomposition out;
  std::map<double, int64_t> value_slot;
  std::vector<double> distinct;
  std::vector<double> codes(static_cast<size_t>(m.volume()));
  for (int64_t f = 0; f < m.volume(); ++f) {
    codes[static_cast<size_t>(f)] = static_cast<double>(f);  // dense, injective by construction
    if (!m.present(f)) continue;
    double v = m.scalar(f);
    auto it = value_slot.find(v);
    if (it == value_slot.end()) {
      it = value_slot.emplace(v, static_cast<int64_t>(distinct.size())).first;
      distinct.push_back(v);
    }
    out.collapse.pairs.push_back({f, it->second});
  }
  Shape vshape{{std::max<int64_t>(1, static_cast<int64_t>(distinct.size()))}};
  if (distinct.empty()) distinct.push_back(0);
  out.value_vector = Mda::dense(vshape, distinct);
  out.index_mda = Mda::dense(m.shape(), codes);
  out.index_gt = gt_from_mda(out.index_mda);
  out.collapse.kind = "collapse";
  out.collapse.source = m.shape();
  out.collapse.target = vshape;
  Mmc all;
  for (size_t i = 0; i < m.shape().order(); ++i) all.source_modes.push_back(i);
  all.target_modes = {0};
  out.collapse.components = {all};
  return out;
}

std::optional<ModeMap> compose(const ModeMap& first, const ModeMap& second) {
  if (first.target != second.source) return std::nullopt;
  ModeMap out;
  out.kind = "custom";
  out.source = first.source;
  out.target = second.target;
  std::map<int64_t, std::vector<int64_t>> mid_to_out;
  for (const auto& [mfrom, mto] : second.pairs) mid_to_out[mfrom].push_back(mto);
  for (const auto& [s, mid] : first.pairs) {
    auto it = mid_to_out.find(mid);
    if (it == mid_to_out.end()) continue;
    for (int64_t t : it->second) out.pairs.push_back({s, t});
  }
  // chain components where one map's target mode set equals the next's source
  for (const auto& c1 : first.components) {
    for (const auto& c2 : second.components) {
      if (c1.target_modes == c2.source_modes) {
        out.components.push_back(Mmc{c1.source_modes, c2.target_modes});
      }
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.pairs.erase(std::unique(out.pairs.begin(), out.pairs.end()), out.pairs.end());
  return out;
}

}  // namespace hct

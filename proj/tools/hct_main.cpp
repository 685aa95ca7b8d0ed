#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hct/network.hpp"
#include "hct/oracle.hpp"
#include "hct/ops.hpp"
#include "hct/pwohg.hpp"
#include "hct/sampler.hpp"
#include "json.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json signature_json(const hct::ComplexitySignature& s) {
  return {{"c_op", s.c_op}, {"c_t", s.c_t}, {"c_alpha", s.c_alpha}, {"c_o", s.c_o},
          {"c_a", s.c_a}};
}

// 0 = ok, 1 = validation failure, 2 = malformed input
int run(int argc, char** argv) {
  CLI::App app{"generalized tensor operation engine"};
  app.require_subcommand(1);

  // check
  auto* check = app.add_subcommand("check", "validate a tensor or complex file");
  std::string check_gt, check_hcc;
  check->add_option("--gt", check_gt, "generalized tensor JSON");
  check->add_option("--hcc", check_hcc, "rank-3 complex JSON");

  // eval / oracle
  auto* eval = app.add_subcommand("eval", "evaluate a tensor operation");
  auto* oracle = app.add_subcommand("oracle", "reference nested-loop evaluation");
  std::string tom_path;
  std::vector<std::string> in_paths;
  for (auto* cmd : {eval, oracle}) {
    cmd->add_option("--tom", tom_path, "operation matrix JSON")->required();
    cmd->add_option("--in", in_paths, "operand tensor files")->required();
  }

  // forward / signature
  auto* forward = app.add_subcommand("forward", "run a network block");
  std::string arch_path;
  std::vector<std::string> fwd_in;
  uint64_t fwd_seed = 7;
  forward->add_option("--arch", arch_path, "architecture JSON")->required();
  forward->add_option("--in", fwd_in, "input tensor files, in declaration order")->required();
  forward->add_option("--seed", fwd_seed, "weight seed");

  auto* sig = app.add_subcommand("signature", "complexity signature of a block");
  std::string sig_arch;
  bool count_acts = false;
  sig->add_option("--arch", sig_arch, "architecture JSON")->required();
  sig->add_flag("--count-activations", count_acts, "count activation rows as operations");

  // decompose / merge
  auto* dec = app.add_subcommand("decompose", "binary decomposition of an operation");
  std::string dec_tom;
  dec->add_option("--tom", dec_tom, "operation matrix JSON")->required();

  auto* merge = app.add_subcommand("merge", "merge two operations");
  std::string merge_t1, merge_t2;
  size_t merge_bind = 0;
  merge->add_option("--tom1", merge_t1, "first operation")->required();
  merge->add_option("--tom2", merge_t2, "second operation")->required();
  merge->add_option("--bind", merge_bind, "operand of the second fed by the first");

  // sample
  auto* sample = app.add_subcommand("sample", "draw random architecture blocks");
  int64_t sample_n = 10;
  uint64_t sample_seed = 42;
  std::string sample_out = "samples";
  std::string sample_input = "64x16x16";
  std::string c_op_range = "2..5", c_alpha_range = "2..4", c_a_range = "2..4",
              c_t_range = "5..16";
  int64_t c_o_max = 11;
  sample->add_option("--n", sample_n, "number of records");
  sample->add_option("--seed", sample_seed, "base seed");
  sample->add_option("--out", sample_out, "output directory");
  sample->add_option("--input", sample_input, "input shape, e.g. 64x16x16");
  sample->add_option("--c-op", c_op_range, "operation count range lo..hi");
  sample->add_option("--c-alpha", c_alpha_range, "arity range lo..hi");
  sample->add_option("--c-a", c_a_range, "coupling arity range lo..hi");
  sample->add_option("--c-t", c_t_range, "tensor count range lo..hi");
  sample->add_option("--c-o-max", c_o_max, "order complexity bound");

  // convert
  auto* convert = app.add_subcommand("convert", "convert between tensor and GT forms");
  std::string conv_gt, conv_mda;
  convert->add_option("--gt-to-mda", conv_gt, "generalized tensor JSON to tensor file");
  convert->add_option("--mda-to-gt", conv_mda, "tensor file to generalized tensor JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (check->parsed()) {
    if (check_gt.empty() == check_hcc.empty()) {
      std::cerr << "check: exactly one of --gt / --hcc required\n";
      return 2;
    }
    hct::Pwohg g;
    if (!check_hcc.empty()) {
      hct::Hcc h = hct::Hcc::from_json(slurp(check_hcc));
      g = hct::decode_rank3(h);
    } else {
      g = hct::Pwohg::from_json(slurp(check_gt));
    }
    hct::SoccReport rep = hct::check_socc(g);
    nlohmann::json j;
    j["connected"] = rep.connected;
    j["consistent"] = rep.consistent;
    if (rep.witness) {
      nlohmann::json w = nlohmann::json::array();
      for (hct::VertexId v : *rep.witness) w.push_back(g.label(v));
      j["witness"] = w;
    }
    if (rep.valid()) {
      hct::MultiIndexAssignment idx = hct::assign_multi_indices(g, 0);
      nlohmann::json table = nlohmann::json::array();
      for (size_t t = 0; t < idx.tuple_sets.size(); ++t) {
        nlohmann::json row;
        nlohmann::json members = nlohmann::json::array();
        for (hct::VertexId v : idx.tuple_sets[t]) members.push_back(g.label(v));
        row["tuple"] = members;
        row["index"] = idx.indices[t];
        table.push_back(row);
      }
      j["multi_index"] = table;
    }
    std::cout << j.dump() << "\n";
    return rep.valid() ? 0 : 1;
  }

  if (eval->parsed()) {
    hct::Tom t = hct::Tom::from_json(slurp(tom_path));
    std::vector<hct::Mda> operands;
    for (const auto& p : in_paths) operands.push_back(hct::Mda::from_json(slurp(p)));
    hct::TomReport rep = hct::validate_tom(t, operands);
    if (!rep.ok) {
      nlohmann::json j;
      j["ok"] = false;
      j["violations"] = rep.violations;
      std::cout << j.dump() << "\n";
      return 1;
    }
    hct::Mda out = hct::evaluate(t, operands, hct::base_ops_by_name(t.base_ops));
    std::cout << out.to_json() << "\n";
    return 0;
  }

  if (oracle->parsed()) {
    std::vector<std::string> operand_texts;
    for (const auto& p : in_paths) operand_texts.push_back(slurp(p));
    std::cout << hct::oracle::evaluate_json(slurp(tom_path), operand_texts) << "\n";
    return 0;
  }

  if (forward->parsed()) {
    hct::Architecture a = hct::Architecture::from_json(slurp(arch_path));
    hct::TemReport rep = hct::validate_tem(a);
    if (!rep.ok) {
      nlohmann::json j;
      j["ok"] = false;
      j["violations"] = rep.violations;
      std::cout << j.dump() << "\n";
      return 1;
    }
    std::map<std::string, hct::Mda> inputs;
    size_t next = 0;
    for (const auto& t : a.tensors) {
      if (t.role != "input") continue;
      if (next >= fwd_in.size()) {
        std::cerr << "forward: " << fwd_in.size() << " input files for more input tensors\n";
        return 2;
      }
      inputs.emplace(t.name, hct::Mda::from_json(slurp(fwd_in[next++])));
    }
    if (next != fwd_in.size()) {
      std::cerr << "forward: more input files than input tensors\n";
      return 2;
    }
    auto outs = hct::forward(a, inputs, hct::seeded_weights(a, fwd_seed));
    nlohmann::json j;
    for (const auto& [n, v] : outs) j[n] = nlohmann::json::parse(v.to_json());
    std::cout << j.dump() << "\n";
    return 0;
  }

  if (sig->parsed()) {
    hct::Architecture a = hct::Architecture::from_json(slurp(sig_arch));
    std::cout << signature_json(hct::signature(a, count_acts)).dump() << "\n";
    return 0;
  }

  if (dec->parsed()) {
    hct::Tom t = hct::Tom::from_json(slurp(dec_tom));
    std::vector<hct::Tom> chain =
        hct::decompose_to_binary(t, hct::base_ops_by_name(t.base_ops));
    nlohmann::json j = nlohmann::json::array();
    for (const auto& x : chain) j.push_back(nlohmann::json::parse(x.to_json()));
    std::cout << j.dump() << "\n";
    return 0;
  }

  if (merge->parsed()) {
    hct::Tom t1 = hct::Tom::from_json(slurp(merge_t1));
    hct::Tom t2 = hct::Tom::from_json(slurp(merge_t2));
    hct::Tom m = hct::merge_ops(t1, t2, merge_bind, hct::base_ops_by_name(t1.base_ops));
    std::cout << m.to_json() << "\n";
    return 0;
  }

  if (sample->parsed()) {
    hct::SampleConstraints c;
    auto parse_range = [](const std::string& s, int64_t& lo, int64_t& hi) {
      size_t dots = s.find("..");
      if (dots == std::string::npos) throw std::runtime_error("range must be lo..hi: " + s);
      lo = std::stoll(s.substr(0, dots));
      hi = std::stoll(s.substr(dots + 2));
    };
    parse_range(c_op_range, c.c_op_min, c.c_op_max);
    parse_range(c_alpha_range, c.c_alpha_min, c.c_alpha_max);
    parse_range(c_a_range, c.c_a_min, c.c_a_max);
    parse_range(c_t_range, c.c_t_min, c.c_t_max);
    c.c_o_max = c_o_max;
    c.input.dims.clear();
    std::stringstream ss(sample_input);
    std::string part;
    while (std::getline(ss, part, 'x')) c.input.dims.push_back(std::stoll(part));
    hct::DatasetManifest m = hct::emit_dataset(sample_n, c, sample_seed, sample_out);
    std::cerr << m.records.size() << " records, " << m.skipped.size() << " skipped\n";
    return 0;
  }

  if (convert->parsed()) {
    if (conv_gt.empty() == conv_mda.empty()) {
      std::cerr << "convert: exactly one of --gt-to-mda / --mda-to-gt required\n";
      return 2;
    }
    if (!conv_mda.empty()) {
      hct::Mda m = hct::Mda::from_json(slurp(conv_mda));
      hct::GenTensor gt = hct::gt_from_mda(m);
      std::cout << gt.graph.to_json() << "\n";
    } else {
      hct::GenTensor gt{hct::Pwohg::from_json(slurp(conv_gt))};
      hct::Mda m = hct::mda_from_gt(gt);
      std::cout << m.to_json() << "\n";
    }
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "malformed input: " << e.what() << "\n";
    return 2;
  } catch (const hct::structure_error& e) {
    nlohmann::json j;
    j["ok"] = false;
    j["violations"] = nlohmann::json::array({e.what()});
    std::cout << j.dump() << "\n";
    return 1;
  } catch (const hct::shape_error& e) {
    nlohmann::json j;
    j["ok"] = false;
    j["violations"] = nlohmann::json::array({e.what()});
    std::cout << j.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

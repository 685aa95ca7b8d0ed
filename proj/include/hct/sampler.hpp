#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hct/network.hpp"

namespace hct {

struct SampleConstraints {
  int64_t c_op_min = 2, c_op_max = 5;
  int64_t c_t_min = 5, c_t_max = 16;
  int64_t c_alpha_min = 2, c_alpha_max = 4;
  int64_t c_a_min = 2, c_a_max = 4;
  int64_t c_o_max = 11;  // 13 under the wider setting
  Shape input{{64, 16, 16}};

  int64_t tom_budget = 10000;       // rejection draws per operation row
  int64_t block_budget = 200;       // whole-block retries for the tensor range
  int64_t tensor_cap = 1 << 20;     // max elements of any sampled tensor
  int64_t grid_cap = 1 << 19;       // max coupled-grid size per operation

  void validate() const;
};

// One random block: a TEM over the input, fresh weights and intermediate
// outputs, every row shape-compatible and inside all constraint ranges.
// Same seed and constraints give the identical block.
Architecture sample_architecture(const SampleConstraints& c, uint64_t seed);

// Per operation row: half get no activation, a quarter one, a quarter two,
// drawn uniformly from leaky_relu / relu6 / layer_norm / softmax; axis-bearing
// kinds get a uniformly random mode of the row's output. Consumers rewire to
// the activated value.
Architecture insert_activations(const Architecture& a, uint64_t seed);

struct DatasetRecord {
  std::string file;
  uint64_t seed = 0;
  ComplexitySignature sig;
  int64_t params = 0;
};

struct DatasetManifest {
  std::vector<DatasetRecord> records;
  std::vector<uint64_t> skipped;  // seeds whose sampling timed out

  std::string to_json() const;
};

// n records under per-record seeds base_seed + index, written to out_dir as
// canonical JSON plus a manifest. Sampling timeouts skip the record and the
// stream continues.
DatasetManifest emit_dataset(int64_t n, const SampleConstraints& c, uint64_t base_seed,
                             const std::string& out_dir);

}  // namespace hct

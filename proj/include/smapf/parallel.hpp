#pragma once

namespace smapf {

/// Selects between the OpenMP kernel and its serial reference. Both produce
/// bit-identical results; the serial path exists for testing and benchmarks.
enum class Exec { Serial, Parallel };

/// Number of OpenMP worker threads (1 when built without OpenMP).
int worker_threads();

}  // namespace smapf

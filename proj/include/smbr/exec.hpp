#pragma once

namespace smbr {

/// Selects the OpenMP kernel or the serial reference path. Both produce
/// bitwise-identical results; the serial path exists for tests and benchmarks.
enum class Exec { parallel, serial };

/// Sets the OpenMP worker count; 0 leaves the runtime default.
void set_workers(int workers);

}  // namespace smbr

#pragma once

namespace synthstab {

/// Selects between the OpenMP kernels and their serial references.
enum class Exec { Serial, Parallel };

/// Sets the OpenMP thread count; values <= 0 keep the runtime default.
void set_thread_count(int threads);
int thread_count();

}  // namespace synthstab

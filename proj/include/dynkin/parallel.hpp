#pragma once

namespace dynkin {

// Worker threads used by the node-parallel kernels. Defaults to the
// DYNKIN_G_THREADS environment variable, else the OpenMP maximum.
int thread_count();

// Overrides the thread count for the rest of the process; n <= 0 restores
// the default.
void set_thread_count(int n);

}  // namespace dynkin

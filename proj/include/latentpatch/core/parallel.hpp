#pragma once

namespace lp::parallel {

// Upper bound on worker threads: LATENTPATCH_THREADS when set and positive,
// otherwise the OpenMP default.
int thread_cap();

// Applies thread_cap() to the OpenMP runtime. Call once at startup.
void configure_from_env();

void set_threads(int n);
int threads();

}  // namespace lp::parallel

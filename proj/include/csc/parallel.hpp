#pragma once

#include <cstddef>
#include <exception>
#include <limits>

namespace csc {

/// OpenMP loop over [0, n) that carries exceptions out of the parallel region. If
/// several iterations throw, the one with the lowest index is rethrown, so the error
/// does not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, std::size_t chunk, F&& body) {
    std::exception_ptr error;
    std::size_t error_at = std::numeric_limits<std::size_t>::max();
    const auto count = static_cast<std::ptrdiff_t>(n);
    const auto c = static_cast<int>(chunk == 0 ? 1 : chunk);
#pragma omp parallel for schedule(dynamic, c)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(csc_parallel_for_error)
            {
                if (static_cast<std::size_t>(i) < error_at) {
                    error_at = static_cast<std::size_t>(i);
                    error = std::current_exception();
                }
            }
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace csc

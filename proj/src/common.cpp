#include "deltet/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace deltet
{
    const char * to_string(ErrorKind kind)
    {
        switch (kind)
        {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::degenerate_input: return "degenerate-input";
        case ErrorKind::degenerate_direction: return "degenerate-direction";
        case ErrorKind::degenerate_tet: return "degenerate-tet";
        case ErrorKind::stale_grid: return "stale-grid";
        case ErrorKind::not_found: return "not-found";
        case ErrorKind::nan_propagation: return "nan-propagation";
        case ErrorKind::diverged: return "diverged";
        case ErrorKind::io: return "io";
        case ErrorKind::internal: return "internal";
        }
        return "unknown";
    }

    void set_num_threads(int n)
    {
#ifdef _OPENMP
        if (n > 0)
        {
            omp_set_num_threads(n);
        }
#else
        (void)n;
#endif
    }

    int num_threads()
    {
#ifdef _OPENMP
        return omp_get_max_threads();
#else
        return 1;
#endif
    }
}

/* Host entry thunk: the boundary between the host calling convention and
 * generated code. Loads the argument vector, binds the frame-pool base,
 * and calls the function entry.
 * Parameters: N. Holes: ORD_TARGET, ORD_POOL. */
#include "holes.h"

CP_DECLARE_TARGET(ORD_TARGET)
CP_DECLARE_VALUE_WIDE(ORD_POOL)

CpRet CP_STENCIL(const uint64_t *cp_argv)
{
    return CP_TARGET(ORD_TARGET)(CP_THUNK_CALL_ARGS);
}

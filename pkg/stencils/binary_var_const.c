/* Supernode: arithmetic on a local and a constant.
 * Parameters: OP, TY, PT, SPILL. Holes: ORD_VAR, ORD_LIT, [ORD_OUT]. */
#include "holes.h"

CP_DECLARE_VALUE(ORD_VAR)
#define CP_LIT_ORD ORD_LIT
#include "cp_lit.inc"
#if SPILL
CP_DECLARE_VALUE(ORD_OUT)
#endif
CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    uint64_t cp_a = CP_FRAME_U64(CP_VAL(ORD_VAR));
    uint64_t cp_b = CP_LIT_BITS;
#include "cp_arith.inc"
#if SPILL
    CP_FRAME_U64(CP_VAL(ORD_OUT)) = cp_r;
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
#else
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_OUT(cp_r));
#endif
}

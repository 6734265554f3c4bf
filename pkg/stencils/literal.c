/* Materialize a constant.
 * Parameters: TY, PT, SPILL. Holes: ORD_LIT, [ORD_OUT]. */
#include "holes.h"

#define CP_LIT_ORD ORD_LIT
#include "cp_lit.inc"

#if SPILL
CP_DECLARE_VALUE(ORD_OUT)
#endif
CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    uint64_t r = CP_LIT_BITS;
#if SPILL
    CP_FRAME_U64(CP_VAL(ORD_OUT)) = r;
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
#else
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_OUT(r));
#endif
}

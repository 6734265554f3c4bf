/* Supernode: branch on comparing a local against a constant.
 * Parameters: OP, TY. Holes: ORD_VAR, ORD_LIT. */
#include "holes.h"

CP_DECLARE_VALUE(ORD_VAR)
#define CP_LIT_ORD ORD_LIT
#include "cp_lit.inc"
CP_DECLARE_CONT(0)
CP_DECLARE_CONT(1)

CpRet CP_STENCIL(CP_ARGS)
{
    uint64_t cp_a = CP_FRAME_U64(CP_VAL(ORD_VAR));
    uint64_t cp_b = CP_LIT_BITS;
#include "cp_cmp.inc"
    if (cp_r) {
        CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
    }
    CP_TAIL CP_CONT(1)(CP_CONT_ARGS);
}

/* Comparison of two operands, yielding 0/1.
 * Parameters: OP, TY, LOC0/LOC1, PT, SPILL, POS_LHS/POS_RHS.
 * Holes: [ORD_LHS], [ORD_RHS | ORD_RHS_LIT], [ORD_OUT]. */
#include "holes.h"

#if LOC0 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_LHS)
#define CP_A_BITS CP_FRAME_U64(CP_VAL(ORD_LHS))
#else
#define CP_A_BITS CP_SLOT(POS_LHS)
#endif

#if LOC1 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_RHS)
#define CP_B_BITS CP_FRAME_U64(CP_VAL(ORD_RHS))
#elif LOC1 == CP_LOC_LIT
#define CP_LIT_ORD ORD_RHS_LIT
#include "cp_lit.inc"
#define CP_B_BITS CP_LIT_BITS
#else
#define CP_B_BITS CP_SLOT(POS_RHS)
#endif

#if SPILL
CP_DECLARE_VALUE(ORD_OUT)
#endif
CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    uint64_t cp_a = CP_A_BITS;
    uint64_t cp_b = CP_B_BITS;
#include "cp_cmp.inc"
#if SPILL
    CP_FRAME_U64(CP_VAL(ORD_OUT)) = cp_r;
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
#else
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_OUT(cp_r));
#endif
}

/* Load an array element: *(elem *)(base + index * size), canonicalized to
 * a sign-extended (or zero-extended for bool) 64-bit payload.
 * Parameters: TY, LOC0/LOC1, POS_BASE/POS_IDX, PT, SPILL.
 * Holes: [ORD_BASE], [ORD_IDX], [ORD_OUT]. */
#include "holes.h"

#if LOC0 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_BASE)
#define CP_BASE CP_FRAME_U64(CP_VAL(ORD_BASE))
#else
#define CP_BASE CP_SLOT(POS_BASE)
#endif
#if LOC1 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_IDX)
#define CP_IDX CP_FRAME_U64(CP_VAL(ORD_IDX))
#else
#define CP_IDX CP_SLOT(POS_IDX)
#endif

#if TY == CP_TY_I32
#define CP_ELEM 4
#define CP_LOAD(p) CP_CANON_I32(*(const int32_t *)(p))
#elif TY == CP_TY_BOOL
#define CP_ELEM 1
#define CP_LOAD(p) ((uint64_t)*(const uint8_t *)(p))
#else
#define CP_ELEM 8
#define CP_LOAD(p) (*(const uint64_t *)(p))
#endif

#if SPILL
CP_DECLARE_VALUE(ORD_OUT)
#endif
CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    uint64_t r = CP_LOAD(CP_BASE + CP_IDX * CP_ELEM);
#if SPILL
    CP_FRAME_U64(CP_VAL(ORD_OUT)) = r;
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
#else
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS_OUT(r));
#endif
}

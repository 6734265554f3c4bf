/* Store an array element: *(elem *)(base + index * size) = value.
 * Parameters: TY, LOC0/LOC1/LOC2, POS_BASE/POS_IDX/POS_VAL.
 * Holes: [ORD_BASE], [ORD_IDX], [ORD_VAL]. */
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
#if LOC2 == CP_LOC_STACK
CP_DECLARE_VALUE(ORD_VAL)
#define CP_VBITS CP_FRAME_U64(CP_VAL(ORD_VAL))
#else
#define CP_VBITS CP_SLOT(POS_VAL)
#endif

#if TY == CP_TY_I32
#define CP_ELEM 4
#define CP_STORE(p, x) (*(int32_t *)(p) = (int32_t)(x))
#elif TY == CP_TY_BOOL
#define CP_ELEM 1
#define CP_STORE(p, x) (*(uint8_t *)(p) = (uint8_t)(x))
#else
#define CP_ELEM 8
#define CP_STORE(p, x) (*(uint64_t *)(p) = (x))
#endif

CP_DECLARE_CONT(0)

CpRet CP_STENCIL(CP_ARGS)
{
    CP_STORE(CP_BASE + CP_IDX * CP_ELEM, CP_VBITS);
    CP_TAIL CP_CONT(0)(CP_CONT_ARGS);
}

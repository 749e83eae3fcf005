#include "subleq/cc/compiler.hpp"

namespace subleq::cc {

// divmod is the doubling division loop for a >= 0, b > 0. The signed
// operators route through sdiv/smod: quotient truncates toward zero, the
// remainder takes the sign of the dividend, x/0 = 0 and x%0 = x.
std::string_view runtime_source() {
  return R"RT(
int divmod(int a, int b, int *m)
{
    int bl, il, bp, ip;
    int z = 0;

start:
    if( a<b ){ *m=a; return z; }

    bl=b; il=1;

next:
    bp = bl; ip = il;
    bl += bl; il += il;

    if( bl > a )
    {
        a = a-bp;
        z += ip;
        goto start;
    }

    if( bl < 0 ) return z;

    goto next;
}

int mul(int a, int b)
{
    int dmm, r=0;

    if( a<0 ){ a = -a; b = -b; }

    while(1)
    {
        if( !a ) return r;
        a=divmod(a,2,&dmm);
        if( dmm ) r += b;
        b += b;
    }
}

int sdiv(int a, int b)
{
    int r;
    if( b==0 ) return 0;
    if( a<0 )
    {
        if( b<0 ) return divmod(-a,-b,&r);
        return -divmod(-a,b,&r);
    }
    if( b<0 ) return -divmod(a,-b,&r);
    return divmod(a,b,&r);
}

int smod(int a, int b)
{
    int r;
    if( b==0 ) return a;
    if( b<0 ) b = -b;
    if( a<0 )
    {
        divmod(-a,b,&r);
        return -r;
    }
    divmod(a,b,&r);
    return r;
}

int printd(int v)
{
    int digits[10], n=0, r;
    if( v<0 ){ printf("-"); v = -v; }
    while(1)
    {
        v = divmod(v,10,&r);
        digits[n] = r;
        n++;
        if( !v ) break;
    }
    while( n>0 )
    {
        n--;
        printf("%c", '0'+digits[n]);
    }
    return 0;
}
)RT";
}

}  // namespace subleq::cc

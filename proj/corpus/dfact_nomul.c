int DivMod(int a, int b, int *m)
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

int Mult(int a, int b)
{
    int dmm, r=0;

    while(1)
    {
        if( !a ) return r;
        a=DivMod(a,2,&dmm);
        if( dmm ) r += b;
        b += b;
    }
}

int printf();

int a=5029, b=1, m=5039;
int k=0, x=1, t;

int main()
{
    start:  k=a;
    loop:   t=Mult(k,x);
            DivMod(t,m,&x);

            if( --k ) goto loop;
            if( --a > b ) goto start;

            printf("%d",x);
}

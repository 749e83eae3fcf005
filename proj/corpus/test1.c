int x=1, y=1, m=5039;
int c=0, ctr=1, t;
int x0=0, y0=0;

int printf();
int main()
{
    while(1)
    {
        y += x; y += y; x += x;
        while( x>=m ) x-=m;
        while( y>=m ) y-=m;

        if( x==x0 && y==y0 ) break;

        if( ++c==ctr )
        {
            x0=x; y0=y;
            c=0; ctr+=ctr;
        }
        printf("point: %d %d loop: %d of %d\n",x0,y0,c+1,ctr);
    }
}

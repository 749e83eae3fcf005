int printf();
int main()
{
    int a=5029;
    int b=1;
    int m=5039;
    int x=1;
    int i,j;

    for( i=a; i>b; i-- )
    for( j=1; j<=i; j++ )
    x = (j*x)%m;

    printf("%d",x);
}
